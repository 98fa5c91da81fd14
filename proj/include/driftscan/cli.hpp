#pragma once

#include <string>
#include <vector>

namespace driftscan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Entry point of the driftscan command line. Logs go to stderr as one JSON
/// object per line.
int run_cli(int argc, const char* const* argv);
/// Same, with args[0] as the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace driftscan
