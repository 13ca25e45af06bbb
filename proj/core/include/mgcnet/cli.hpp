#pragma once

#include <string>
#include <vector>

namespace mgcnet {

// Dispatches the mgcnet command line: subcommands synth, preprocess,
// build-graph, train, eval and predict. `args` excludes the program name.
// Returns 0 on success, 2 on a usage error (unknown subcommand, flag or
// config key), 1 on any module error.
int run_cli(const std::vector<std::string>& args);

}  // namespace mgcnet
