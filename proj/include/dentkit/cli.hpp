#pragma once

#include <string>
#include <vector>

namespace dentkit {

// Runs the command-line frontend. `args` excludes the program name.
// Returns 0 on success, 1 on runtime failure, 2 on usage/validation errors.
int run_cli(std::vector<std::string> args);

}  // namespace dentkit
