#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Runs one subcommand. `args` excludes the program name. Exit codes: 0 on
/// success, 2 when an input or flag fails validation, 3 on any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsim::cli
