#pragma once

// Command-line front end: generate | discover | train | bias | eval.
// Exit codes: 0 success, 1 runtime failure (including partial), 2 usage error.

#include <ostream>
#include <string>
#include <vector>

namespace sicl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace sicl::cli
