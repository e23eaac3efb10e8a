#ifndef NUDGE_CLI_HPP
#define NUDGE_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace nudge::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;
inline constexpr int kUsageError = 2;

// Runs one nudge-iv invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace nudge::cli

#endif  // NUDGE_CLI_HPP
