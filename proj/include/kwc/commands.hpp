#pragma once

#include "kwc/config.hpp"
#include "kwc/grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kwc {

enum ExitCode : int {
    kExitPass = 0,
    kExitError = 1,
    kExitViolation = 2,
    kExitConfig = 3,
};

struct CommandContext {
    Config config;
    std::string out_dir;  // created if missing
    std::uint64_t seed = 0;
    std::ostream* log = nullptr;  // summary lines; null for silence
};

/// Output directory and seed: the command line wins over [experiment] out / seed.
CommandContext make_context(Config cfg, const std::string& out_override, const std::uint64_t* seed_override,
                            std::ostream* log);

const std::vector<std::string>& command_names();

/// Runs one subcommand and maps failures to exit codes: configuration
/// problems to 3, anything else thrown to 1.
int run_command(const std::string& name, const CommandContext& ctx);

int cmd_gamma_check(const CommandContext& ctx);
int cmd_sigma_table(const CommandContext& ctx);
int cmd_staircase(const CommandContext& ctx);
int cmd_metric_demo(const CommandContext& ctx);
int cmd_elpf_check(const CommandContext& ctx);
int cmd_denoise(const CommandContext& ctx);

// Fixtures shared with the tests.

/// Monotone staircase on [0, 1]: `steps` risers of `height`, intermediate
/// plateaus of `riser_nodes` nodes, the rest split between the two ends.
GridField staircase_signal(std::size_t nodes, std::size_t steps, double height, std::size_t riser_nodes);

/// Thick Cantor set truncated at `depth`: [0, 1] minus the open intervals
/// (a / 2^n - 2^-(2n+1), a / 2^n + 2^-(2n+1)) for n <= depth.
bool in_thick_cantor(double r, std::size_t depth);

} // namespace kwc
