#pragma once

#include <string>
#include <vector>

namespace sas {

// Runs one CLI command; returns the process exit code:
//   0 success / all assertions passed
//   1 a verification assertion failed
//   2 usage or configuration error
int run_command(int argc, const char* const* argv);
int run_command(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace sas
