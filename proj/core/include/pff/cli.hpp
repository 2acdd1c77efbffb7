#pragma once

#include <string>
#include <vector>

namespace pff {

// Command-line entry point. Subcommands: degrade, train, infer, eval,
// analyze. Returns 0 on success, 1 on usage errors, 2 on data/format
// errors, 3 on numerical aborts. Machine-readable TSV goes to stdout,
// human summaries and diagnostics to stderr.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace pff
