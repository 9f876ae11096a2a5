#pragma once

#include <string>

#include "polaron/config.hpp"

namespace polaron {

// Each command writes into run.out and returns the exit status:
// 0 all checks passed, 1 a check failed or a solver raised.
int cmd_solve_pekar(const RunConfig& cfg);
int cmd_effective_mass(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_damping(const RunConfig& cfg);
int cmd_traveling_wave(const RunConfig& cfg);
// every command above in its own subdirectory, plus a summary manifest
int cmd_check(const RunConfig& cfg);

// CLI entry point; usage and configuration errors return 2
int run_cli(int argc, char** argv);

}  // namespace polaron
