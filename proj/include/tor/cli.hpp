#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tor {

/// Runs the command line tool. `args` excludes the program name. All output
/// goes to the given streams so the tool is testable in-process.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/// Top-level --help text.
std::string cli_help_text();

}  // namespace tor
