#pragma once

#include <string>
#include <vector>

namespace clinex {

/// sysexits-style codes used by the command-line tool.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kPartialFailure = 2;
inline constexpr int kUsage = 64;
inline constexpr int kDataError = 65;
inline constexpr int kNoInput = 66;
inline constexpr int kSoftware = 70;
inline constexpr int kIoError = 74;
}  // namespace exit_code

/// Entry point of the `clinex` tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace clinex
