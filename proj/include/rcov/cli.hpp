#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rcov {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitPropertyFailure = 1, kExitInputError = 2, kExitFatal = 3 };

/// Runs the command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcov
