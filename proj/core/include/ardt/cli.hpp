#pragma once

#include <string>
#include <vector>

namespace ardt::cli {

// Entry point behind the `ardt` binary. Subcommands: collect, relabel,
// train, eval, sweep, oracle, gradcheck. Returns the process exit code:
// 0 success, 1 runtime failure, 2 usage errors.
int run_command(const std::vector<std::string>& args);

}  // namespace ardt::cli
