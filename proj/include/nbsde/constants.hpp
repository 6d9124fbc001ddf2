#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbsde/coefficients.hpp"
#include "nbsde/geometry.hpp"

namespace nbsde
{
enum class ConstantsVariant
{
    analytic,
    probabilistic,
};

//---------------------------------------------------------------------------//
/*!
 * Structure constants of conditions (i)-(vii) and the derived Picard
 * constants. Derived fields are filled by choose_constants.
 */
struct StructureConstants
{
    double alpha = 0;
    double beta = 0;
    double K = 0;
    double M = 0;
    double k = 0;
    double beta_prime = 0;
    double C0 = 0;

    double lambda = 0;
    double mu = 0;
    double eps1 = 0;
    double eps2 = 0;
    double eps3 = 0;
    double gamma = 0;

    //! Analytic variant only: norm of the trace operator and its provenance.
    std::optional<double> trace_norm;
    std::string trace_norm_source;
    std::vector<std::string> notes;
};

//! Extra quantities needed by the analytic recipe.
struct AnalyticInputs
{
    double drift_sup = 0;  //!< sup |b|
    double q_sup = 0;      //!< sup q
};

/*!
 * Fill λ, μ, ε₁, ε₂, ε₃, γ.
 *
 * Probabilistic: ε₁ = (1 − 2√2k)/2, ε₂ = (1 − ε₁)/2,
 * λ = −2α + K²/ε₁ + (1 − ε₁)/2, μ = −β, γ = 2k²/(ε₂(1 − ε₁ − ε₂)).
 *
 * Analytic: τ = M_b²ε₁ = ε₃ = (1 − 2√2k)/4, ε₂ = (1 − 2τ)/2,
 * γ = 2k²/(ε₂(1 − 2τ − ε₂)); requires the trace norm and the α-largeness
 * inequality 1 − 2τ − ε₂ + 2(−α + M₁ + β'‖Tr‖) + 1/ε₁ + K²/ε₃ < 0.
 */
StructureConstants choose_constants(StructureConstants consts,
                                    ConstantsVariant variant,
                                    AnalyticInputs const& analytic = {});

double k_threshold();  //!< 1/(2√2)

//---------------------------------------------------------------------------//
struct ConditionResult
{
    std::string name;
    bool passed = true;
    std::size_t n_checked = 0;
    //! Largest observed (lhs − rhs); negative means slack.
    double worst_excess = -std::numeric_limits<double>::infinity();
    std::string worst_sample;
};

struct StructureReport
{
    std::vector<ConditionResult> conditions;
    std::vector<std::string> notes;

    bool all_passed() const;
    ConditionResult const* find(std::string const& name) const;
};

struct ValidationOptions
{
    int budget = 2000;
    double box = 10.0;       //!< y, y', z, z' drawn from [−box, box]
    double probe_eta = 1e-4; //!< local slope probe width
    std::uint64_t seed = 1;
};

/*!
 * Falsification check of conditions (i)-(vii) and K² < 2α by random
 * sampling. Each sample draws a random pair plus a local slope probe; an
 * extra anchor sample sits at y = 0, z = 0.
 */
StructureReport validate_structure(Domain const& domain,
                                   CoefficientSet const& coeffs,
                                   StructureConstants const& consts,
                                   ValidationOptions const& options = {});

nlohmann::json to_json(StructureConstants const& c);
nlohmann::json to_json(StructureReport const& r);

}  // namespace nbsde
