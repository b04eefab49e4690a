#pragma once

#include <iosfwd>

namespace slicebench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable overriding the default store directory.
inline constexpr const char* kStoreEnv = "SLICEBENCH_STORE";
inline constexpr const char* kDefaultStoreDir = "slicebench-store";

/// Entry point for the `slicebench` tool. Exit codes: 0 success,
/// 1 operational failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slicebench
