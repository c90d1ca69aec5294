#pragma once

// Command-line front end: `run`, `sweep` and `price` subcommands.

#include <iosfwd>
#include <string>
#include <vector>

namespace evcharge::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfig = 2,
    kIo = 3,
    kSolver = 4,
    kInfeasible = 5,
};

/// Parses `args` (without the program name) and runs the command. Errors are
/// reported as one JSON line on `err`; nothing is written to the output
/// directory unless every output was computed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace evcharge::cli
