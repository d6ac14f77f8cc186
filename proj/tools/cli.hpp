#pragma once

#include <iosfwd>

namespace gridco::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int { ok = 0, input_error = 1, infeasible = 2, runtime_failure = 3 };

// Runs one gridco invocation. Normal output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridco::cli
