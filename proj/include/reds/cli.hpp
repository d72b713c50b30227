#pragma once

#include <string>
#include <vector>

namespace reds::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kEmptyNullspace = 3,
  kIoError = 4,
};

/// Entry point of the `red` tool. argv[0] is the program name.
int main(const std::vector<std::string>& argv);

}  // namespace reds::cli
