#pragma once

#include <string>
#include <vector>

namespace keyopt::cli {

// Command-line driver behind the keyopt executable. Returns the process
// exit code: 0 on success, 1 on flag or config validation failure, 2 on a
// runtime failure while executing a valid command.
int run(int argc, const char* const* argv);

// Same driver for in-process callers; args exclude the program name.
int run(const std::vector<std::string>& args);

}  // namespace keyopt::cli
