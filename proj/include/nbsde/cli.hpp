#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbsde/config.hpp"

namespace nbsde
{
//! Process exit codes.
enum ExitCode : int
{
    exit_ok = 0,
    exit_config = 1,
    exit_no_contraction = 2,
    exit_inadmissible = 3,
    exit_check_failed = 4,
    exit_runtime = 5,
};

//! Command-line settings that take precedence over the config file.
struct CliOverrides
{
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    bool override_admissibility = false;
};

void apply_overrides(RunConfig& config, CliOverrides const& overrides);

/*!
 * Picard solve. Writes solution.csv, mesh.txt, trace.csv and summary.json
 * into the output directory.
 */
int cmd_solve(RunConfig const& config, std::ostream& out);

//! Martingale residual test and probe-point Feynman-Kac comparison of a field.
int cmd_verify(RunConfig const& config, std::filesystem::path const& field, std::ostream& out);

int cmd_check_conditions(RunConfig const& config, std::ostream& out);

//! Dumps `count` reflected paths (binary) plus a CSV of their states.
int cmd_simulate(RunConfig const& config, std::size_t count, std::ostream& out);

//! Local-time rate and divergence-identity suites on the configured domain.
int cmd_bench(RunConfig const& config, std::ostream& out);

//! Parse arguments, dispatch, and map errors to exit codes.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace nbsde
