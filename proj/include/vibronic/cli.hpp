#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vibronic {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 2;
inline constexpr int not_converged = 3;
}  // namespace exit_code

/// Runs one command. `args` excludes the program name. Results go to the
/// files named by --out (or to `out`); diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vibronic
