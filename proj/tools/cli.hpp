#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wlns::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBlowUp = 2;

/// Runs the wlns command line; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wlns::cli
