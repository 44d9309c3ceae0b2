#pragma once

// Command-line entry point. Kept as a library function so tests can drive
// whole subcommands in-process.

#include <string>
#include <vector>

namespace confkit::cli {

/// Runs one subcommand. `args` is argv without the program name, in natural
/// order. Returns the process exit code: 0 on success (and for --help /
/// --version), 1 on runtime failure, 2 on usage errors.
int run(std::vector<std::string> args);

}  // namespace confkit::cli
