#pragma once

#include <string>
#include <vector>

namespace synprobe::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (without the program name) and returns the exit
/// code: 0 success, 1 usage, 2 data, 3 numerical.
int run(const std::vector<std::string>& args);

}  // namespace synprobe::cli
