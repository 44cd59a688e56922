#pragma once

#include <string>
#include <vector>

namespace duet {

// Entry point shared by the binary and the tests. Subcommands: train-coarse,
// train-fine, eval, predict, diagnose, gap-hist. Returns 0 on success, 1 on a
// runtime error, 2 on a usage error.
int run_command(const std::vector<std::string>& argv);

}  // namespace duet
