#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace apfp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kNumeric = 3,
  kNotInClosure = 4,
  kNoConvergence = 5,
  kRankTooHigh = 6,
  kDemoFailed = 7,
};

/// Runs the command line (args excludes the program name). Reports go to
/// --out or to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace apfp::cli
