#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "nbsde/coefficients.hpp"
#include "nbsde/constants.hpp"
#include "nbsde/estimate.hpp"
#include "nbsde/fem.hpp"
#include "nbsde/reflect.hpp"

namespace nbsde
{
//! Constant multiplying dL integrals, fitted once against the FEM oracle and frozen.
constexpr double kBoundaryCalibration = 0.5;

struct McParams
{
    std::size_t n_paths = 1000;
    double T = 5;
    double h = 1e-3;
    std::uint64_t seed = 1;
    double truncation_tail_bound = 0;
    ReflectionScheme scheme = ReflectionScheme::projection;
};

//! Seed of path i in the sub-experiment `tag`.
std::uint64_t path_seed(std::uint64_t master, std::uint64_t tag, std::size_t i);

//---------------------------------------------------------------------------//
//! sup_x E^x[e^{2∫q}] ≲ C e^{−θt}, fitted at geometric times.
struct DecayFit
{
    double C = 1;
    double theta = 0;
    std::vector<double> times;
    std::vector<double> means;
};

/*!
 * Fit ln E^m[e^{2∫_0^t q}] ≈ ln C − θt at t = T, T/2, ..., T/2^(n−1) using
 * uniform starts. Throws AdmissibilityError when θ ≤ 1e-3.
 */
DecayFit fit_decay(Domain const& domain, PathScalar const& q, McParams const& p, int n_points = 6);

/*!
 * Bound on E[∫_T^∞ e^{∫q}(|F| dt + c_bd|H| dL)] from the decay fit, with the
 * local time rate σ(∂D)/|D|.
 */
double tail_bound_single(DecayFit const& fit, Domain const& domain, double sup_f, double sup_h,
                         double T);
//! Bound on E[∫_T^∞ e^{2∫q} dt] (times the integrand's sup).
double tail_bound_double(DecayFit const& fit, double T);

//! Smallest T whose single-weight tail bound is below 0.1·target_se.
double choose_horizon(DecayFit const& fit, Domain const& domain, double sup_f, double sup_h,
                      double target_se);

//---------------------------------------------------------------------------//
struct FkResult
{
    Estimate estimate;
    double truncation_tail_bound = 0;
    DecayFit decay;
};

/*!
 * c_bd·E^{x0}[∫_0^T e^{∫q} φ(X) dL].
 */
FkResult fk_pure_boundary(Domain const& domain, Vec const& x0, PathScalar const& q,
                          PathScalar const& phi, McParams const& p);

/*!
 * E^{x0}[∫_0^T e^{∫q} F(X) dt + c_bd ∫_0^T e^{∫q} H(X) dL], the solution of
 * ½Δv + qv + F = 0 in D, <∇v, n> + H = 0 on ∂D.
 */
FkResult fk_linear_frozen(Domain const& domain, Vec const& x0, PathScalar const& q,
                          PathScalar const& F, PathScalar const& H, McParams const& p);

//! Probes several points sharing one decay fit.
std::vector<FkResult> fk_linear_frozen_points(Domain const& domain, std::vector<Vec> const& points,
                                              PathScalar const& q, PathScalar const& F,
                                              PathScalar const& H, McParams const& p);

struct CalibrationResult
{
    double fem_value = 0;
    Estimate raw;       //!< E[∫e^{∫q}dL] without the constant
    double fitted = 0;  //!< fem_value / raw mean
    double fitted_se = 0;
    double truncation_tail_bound = 0;
    bool consistent = false;  //!< |fitted − c_bd| ≤ 3 SE + allowance
};

/*!
 * Pure-boundary problem q ≡ −1, φ ≡ 1 at the center, solved by FEM (mesh
 * size h_mesh) and by Monte Carlo without the boundary constant.
 */
CalibrationResult calibrate_boundary_constant(Domain const& domain, double h_mesh,
                                              McParams const& p, double allowance = 0.02);

//---------------------------------------------------------------------------//
struct ConditionEstimate
{
    Estimate value;       //!< horizon T
    Estimate half;        //!< horizon T/2, same paths
    Estimate increment;   //!< value − half, pathwise
    bool divergent = false;
};

struct ConditionsCReport
{
    ConditionEstimate c1;
    ConditionEstimate c2;
    ConditionEstimate c3;  //!< max over the start grid
    Vec c3_argmax;
    std::size_t grid_size = 0;
    double T = 0;
};

/*!
 * (C.1) E^{x0}[∫e^{∫q}dL], (C.2) E^{x1}[∫e^{2∫q}dL],
 * (C.3) max over a 16-point interior grid of E^x[∫e^{2∫q}|q|²dt].
 *
 * An estimate is flagged divergent when its growth from T/2 to T exceeds
 * 5% of its value plus 3 standard errors.
 */
ConditionsCReport check_conditions_C(Domain const& domain, PathScalar const& q, McParams const& p,
                                     Vec const& x0, Vec const& x1, int grid_points = 16);

//---------------------------------------------------------------------------//
struct ResidualReport
{
    Estimate residual;
    VarianceEstimate residual_variance;
    Estimate predicted_variance;  //!< Σ|∇u(X_j)|²h per path
    double terminal_half = 0;     //!< mean e^{λt+μL+2∫q}|u|² at T/2
    double terminal_full = 0;     //!< same at T
    bool pass_mean = false;
    bool pass_variance = false;
    bool pass_terminal = false;

    bool passed() const { return pass_mean && pass_variance && pass_terminal; }
};

/*!
 * Martingale residual along uniformly started paths:
 *   R = u(X_T) − u(X_0) + Σ(qu + f(·,u,∇u))(X_j)h − Σ<∇u(X_{j+1}), push_j>
 *       + ∫g(·,u,∇u)∗dX,
 * whose martingale part has quadratic variation ∫|∇u|²dt.
 */
ResidualReport martingale_residual_test(Domain const& domain, FemFunction const& u,
                                        CoefficientSet const& coeffs,
                                        StructureConstants const& consts, McParams const& p);

nlohmann::json to_json(ResidualReport const& r);
nlohmann::json to_json(ConditionsCReport const& r);

}  // namespace nbsde
