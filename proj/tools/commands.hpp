#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kNumerical = 3,
};

/// Entry point shared by the `gsr` binary and the tests. `args` excludes
/// the program name. Diagnostics go to `err` as a single line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsr::cli
