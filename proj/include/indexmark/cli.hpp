#pragma once

#include <iosfwd>

namespace indexmark {

inline constexpr int kExitPresent = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAbsent = 3;

/// Runs the `indexmark` command line. Results go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace indexmark
