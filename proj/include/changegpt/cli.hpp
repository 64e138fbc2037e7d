#pragma once

#include <iosfwd>

namespace changegpt {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // the agent gave no answer
inline constexpr int kExitBadArgs = 2;
inline constexpr int kExitImageError = 3;
inline constexpr int kExitBackendError = 4;
inline constexpr int kExitDatasetError = 5;

/// Entry point shared by the executable and the tests. argv[0] is the
/// program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace changegpt
