#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace radfeed::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kParseError = 1,
  kDiverged = 2,
  kInvalidFlags = 3,
  kInequalityFailed = 4,
};

/// Runs the command line `args` (args[0] is the program name) writing the
/// report to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace radfeed::cli
