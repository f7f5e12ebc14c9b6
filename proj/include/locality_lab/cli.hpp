#pragma once

#include <string>
#include <vector>

namespace locality_lab::cli {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailed = 1;
constexpr int kExitUsage = 2;

// Entry point of the locality-lab binary. Returns the process exit code.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace locality_lab::cli
