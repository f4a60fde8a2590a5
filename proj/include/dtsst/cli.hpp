#pragma once

#include <iosfwd>

namespace dtsst {

/// Exit codes of the command line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numeric = 3 };

/// Runs the `dtsst` command line. Output files go below $DTSST_OUT
/// (default ./runs) unless an absolute --out is given.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace dtsst
