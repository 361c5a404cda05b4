#pragma once

#include <iosfwd>

namespace typicality {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsageError = 2;

/// Entry point for the `typicality` tool: validate | eval | stability.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace typicality
