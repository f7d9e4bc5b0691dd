#pragma once

#include <string>
#include <vector>

namespace gzero::cli {

// Parses one command line and executes the selected subcommand. Returns the
// process exit code: 0 success, 2 bad configuration or input, 3 aborted
// round, 4 backend failure. Never throws; diagnostics go to stderr.
int run_cli(int argc, const char* const* argv);

// In-process variant for tests; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace gzero::cli
