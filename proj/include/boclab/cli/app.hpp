#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace boclab::cli {

// Parses argv-style arguments (without the program name), runs the command
// and returns the process exit code. Run directories are printed to `out`,
// errors to `err`.
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace boclab::cli
