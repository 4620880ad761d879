#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dbps::cli {

/// Process exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 1;
inline constexpr int exit_runtime_error = 2;

/// Runs the command line `args` (without the program name). Summaries go to
/// `out`, diagnostics to `err`; the return value is the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dbps::cli
