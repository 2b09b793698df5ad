#pragma once

#include <string>
#include <vector>

namespace dvk::cli {

/// Parses and runs one invocation; args[0] is the program name. Returns the
/// process exit code.
int run(const std::vector<std::string>& args);

}  // namespace dvk::cli
