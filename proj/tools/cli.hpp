#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wmt::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `wmt` tool. `args` excludes the program name.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// Default data directory: $WMT_DATA_DIR, else "data".
std::string default_data_dir();

}  // namespace wmt::cli
