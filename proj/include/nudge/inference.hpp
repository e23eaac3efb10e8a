#ifndef NUDGE_INFERENCE_HPP
#define NUDGE_INFERENCE_HPP

#include "nudge/estimators.hpp"
#include "nudge/glim.hpp"
#include "nudge/oracle.hpp"

#include <cstdint>
#include <iosfwd>

namespace nudge {

enum class BootstrapMethod { Percentile };

struct BootstrapConfig {
    std::size_t B = 1000;
    std::uint64_t seed = 0;
    double ci_level = 0.95;
    BootstrapMethod method = BootstrapMethod::Percentile;

    void check() const;  // InvalidConfig unless B >= 2 and 0 < ci_level < 1
};

// Share of failed replicates (or replications) above which results are refused.
inline constexpr double kMaxFailureShare = 0.10;

// Percentile bootstrap of spec's point estimate. Replicate b resamples rows
// with a stream seeded by (cfg.seed, b), so results do not depend on
// `workers`. Errors of the full-data estimate propagate.
BootstrapSummary bootstrap(const ObservedDataset& data, const EstimatorSpec& spec, const BootstrapConfig& cfg,
                           std::size_t workers = 1);

// Estimate plus bootstrap summary in one report.
EstimateReport estimate_with_bootstrap(const ObservedDataset& data, const EstimatorSpec& spec,
                                       const BootstrapConfig& cfg, std::size_t workers = 1);

struct McStudyResult {
    std::string estimator;
    std::string target;
    double truth = 0.0;
    std::size_t n = 0;
    std::size_t replications = 0;  // successful ones
    std::size_t failures = 0;
    double bias = 0.0;
    double sd = 0.0;  // population SD over replications, so rmse^2 = bias^2 + sd^2
    double rmse = 0.0;
    double coverage = 0.0;
    double mean_ci_width = 0.0;
};

struct McStudyOptions {
    std::size_t workers = 1;
    std::ostream* progress = nullptr;  // one line per 10% completed
};

// R cycles of simulate -> observe -> estimate -> bootstrap. Replication r
// simulates with derive_seed(cfg.seed, r) and bootstraps with a salted
// derivation of the same pair.
McStudyResult mc_study(const ValidatedScenario& s, const EstimatorSpec& spec, const CausalTarget& target,
                       std::size_t n, std::size_t R, const BootstrapConfig& cfg, const McStudyOptions& opts = {});

// The target an estimator is meant to recover when none is given.
CausalTarget default_target(const EstimatorSpec& spec);

}  // namespace nudge

#endif  // NUDGE_INFERENCE_HPP
