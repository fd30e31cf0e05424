#pragma once

#include <iosfwd>

namespace detlab::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr unsigned long long kDefaultSeed = 20240601ULL;

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_usage = 2, exit_numerical = 3 };

/// Parses argv, runs one subcommand and writes the JSON summary to `out`.
/// Diagnostics for usage errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace detlab::cli
