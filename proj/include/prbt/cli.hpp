#ifndef PRBT_CLI_HPP
#define PRBT_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace prbt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // model or flag error
inline constexpr int kExitFailure = 3;  // pipeline or verification failure
inline constexpr int kExitUnknown = 4;  // safety could not be established

/// Runs one subcommand (reach, certify, simulate, check, plot). `args`
/// excludes the program name. Diagnostics go to `err`, results to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prbt

#endif  // PRBT_CLI_HPP
