#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpst {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs one command line; `args[0]` is the program name. `-` as a file reads `in`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace mpst
