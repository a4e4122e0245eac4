#pragma once

#include <string>
#include <vector>

namespace s2m {

/// Command-line entry point (also used in-process by tests).
/// Exit codes: 0 success, 1 usage/config error, 2 runtime error.
int run_cli(const std::vector<std::string>& args);

}  // namespace s2m
