#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oceanbo::cli {

// Bad flags, missing inputs or an invalid configuration file; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Parses argv, runs one subcommand and returns the process exit code.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace oceanbo::cli
