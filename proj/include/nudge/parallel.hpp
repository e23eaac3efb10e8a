#ifndef NUDGE_PARALLEL_HPP
#define NUDGE_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <optional>

namespace nudge {

// Worker cap from NUDGE_IV_THREADS. nullopt when the variable is set but is
// not a positive integer.
std::optional<std::size_t> threads_from_env();

// Effective worker count: NUDGE_IV_THREADS when valid, else hardware concurrency.
std::size_t worker_count();

// Calls fn(i) for i in [0, n) using up to `workers` threads. Work is split in
// contiguous blocks; fn must only write to state owned by index i.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace nudge

#endif  // NUDGE_PARALLEL_HPP
