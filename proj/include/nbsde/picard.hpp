#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "nbsde/constants.hpp"
#include "nbsde/errors.hpp"
#include "nbsde/fem.hpp"
#include "nbsde/probeval.hpp"

namespace nbsde
{
struct PicardOptions
{
    double h_mesh = 0.05;
    double tol = 1e-8;
    int max_iter = 50;
    bool override_admissibility = false;
    ConstantsVariant variant = ConstantsVariant::probabilistic;
    AnalyticInputs analytic;
    InnerSolveOptions inner;
};

//---------------------------------------------------------------------------//
struct PicardTrace
{
    std::vector<FemFunction> iterates;  //!< u⁰ = 0, u¹, ...
    std::vector<double> increments;     //!< ‖uⁿ − uⁿ⁻¹‖_{H¹}, n = 1..n_iterations
    std::vector<double> ratios;         //!< increments[n] / increments[n−1]
    std::vector<InnerSolveInfo> inner;
    StructureConstants constants;
    double gamma = 0;
    bool converged = false;
    int n_iterations = 0;
    double final_residual = 0;  //!< H¹ dual norm of the nonlinear weak residual
    bool guarantee_void = false;
    std::string admissibility_message;

    FemFunction const& solution() const { return iterates.back(); }
};

//! Raised when increment ratios exceed 1 three times in a row.
class NoContraction : public Error
{
  public:
    NoContraction(std::string const& what, PicardTrace trace)
        : Error(what), trace_(std::move(trace))
    {
    }
    PicardTrace const& trace() const { return trace_; }

  private:
    PicardTrace trace_;
};

/*!
 * Picard sequence u⁰ = 0, uⁿ solving the semilinear problem with
 * g frozen at (uⁿ⁻¹, ∇uⁿ⁻¹), until the H¹ increment is at most tol.
 *
 * Without the override, inadmissible constants raise InadmissibleConstants
 * and three consecutive ratios above 1 raise NoContraction. With the
 * override both are recorded and the run continues; the trace is marked
 * guarantee_void.
 */
PicardTrace run_picard(Domain const& domain, CoefficientSet const& coeffs,
                       StructureConstants const& consts, PicardOptions const& options = {});

//---------------------------------------------------------------------------//
struct ContractionRow
{
    int iteration = 0;  //!< n of the increment ‖uⁿ − uⁿ⁻¹‖
    double increment = 0;
    double squared_ratio = 0;
    bool exceeds_gamma = false;
    std::optional<double> weighted_increment;
};

struct ContractionReport
{
    double gamma = 0;
    double allowance = 0;
    std::vector<ContractionRow> rows;  //!< one per increment after the first
    bool any_exceeds_gamma = false;
};

//! Squared increment ratios against γ; needs at least two increments.
ContractionReport contraction_report(std::vector<double> const& increments, double gamma,
                                     double allowance = 0);
ContractionReport contraction_report(PicardTrace const& trace, double allowance = 0);

/*!
 * Weighted increments E^m[∫_0^T e^{λt+μL_t+2∫q}(|Δuⁿ|² + |∇Δuⁿ|²)dt]
 * under uniformly started paths, one per Picard increment.
 */
std::vector<Estimate> weighted_increments(Domain const& domain, PicardTrace const& trace,
                                          CoefficientSet const& coeffs, McParams const& p);

void attach_weighted(ContractionReport& report, std::vector<Estimate> const& weighted);

void write_trace_csv(PicardTrace const& trace, std::filesystem::path const& path);
nlohmann::json to_json(ContractionReport const& r);

}  // namespace nbsde
