#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace token_lab::cli {

enum ExitCode : int { Ok = 0, SolverError = 1, UsageError = 2 };

// Runs one command line (args excludes the program name). Normal output goes
// to `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Worker count for sweeps: hardware concurrency, capped by TOKEN_LAB_THREADS.
unsigned thread_budget();

} // namespace token_lab::cli
