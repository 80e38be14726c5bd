#pragma once

#include <ostream>

namespace oblivious::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kAssertionFailed = 1;
inline constexpr int kUsageError = 2;

/// Entry point shared by the executable and the tests. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oblivious::cli
