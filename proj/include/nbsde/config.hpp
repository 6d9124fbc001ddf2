#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "nbsde/coefficients.hpp"
#include "nbsde/constants.hpp"
#include "nbsde/geometry.hpp"

namespace nbsde
{
enum class Backend
{
    fem,
    stochastic_verify,
    both,
};

struct SolverConfig
{
    Backend backend = Backend::fem;
    double mesh_h = 0.05;
    double tol = 1e-8;
    int max_iter = 50;
    double inner_tol = 1e-10;
    std::size_t paths = 10000;
    double step = 1e-4;
    double horizon = 0.5;
    std::uint64_t seed = 1;
    std::string output = "out";
    bool override_admissibility = false;
    int validation_budget = 2000;
    double validation_box = 10;
    int probe_points = 5;
    double probe_allowance = 0.05;
    std::size_t probe_paths = 1000;
    double probe_step = 1e-3;
    double probe_horizon = 6;
    std::size_t conditions_paths = 1000;
    double conditions_step = 1e-3;
    double conditions_horizon = 10;
};

//---------------------------------------------------------------------------//
//! Fully validated run configuration.
struct RunConfig
{
    std::string origin;  //!< file name used in diagnostics
    std::string domain_kind = "disk";
    int dimension = 2;
    double radius = 1;
    double semi_axis_x = 1;
    double semi_axis_y = 1;

    std::map<std::string, std::string> coefficient_text;
    CoefficientSet coeffs;

    StructureConstants constants;
    ConstantsVariant variant = ConstantsVariant::probabilistic;

    SolverConfig solver;

    std::optional<Expr> reference;  //!< exact solution u(x), if known
    std::string reference_text;
    double h1_threshold = 0;

    Domain domain() const;
};

/*!
 * Parse INI-style text: [section] headers, key = value lines, values
 * optionally double-quoted, full-line comments starting with # or ;.
 * Unknown sections or keys, duplicates, bad numbers and expressions that do
 * not parse raise ConfigError naming the line.
 */
RunConfig parse_config(std::string const& text, std::string const& origin = "<config>");
RunConfig load_config(std::filesystem::path const& path);

}  // namespace nbsde
