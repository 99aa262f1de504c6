#pragma once

#include <string>
#include <vector>

namespace survmi::cli {

// Parses and executes one CLI invocation. Exit codes: 0 success,
// 1 domain error, 2 usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace survmi::cli
