#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mgauge::cli {

// Parses argv-style arguments (without the program name), runs the command
// and returns the process exit code. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mgauge::cli
