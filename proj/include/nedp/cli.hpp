#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nedp {

/// Runs the command-line driver on `args` (without the program name).
/// Returns the process exit code: 0 success, 1 validation or usage error,
/// 2 I/O error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nedp
