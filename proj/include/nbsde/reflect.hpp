#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "nbsde/geometry.hpp"
#include "nbsde/rng.hpp"

namespace nbsde
{
enum class ReflectionScheme
{
    projection,    //!< Euler step, then project exterior proposals onto ∂D
    penalization,  //!< Euler step with drift −δ(X)/ε, ε = √h
};

/*!
 * Local-time normalization.
 *
 * Stored increments ΔL are in the surface-measure normalization, for which
 * E^m[L_T] = T σ(∂D)/|D| under a uniform start. The reflection push is
 * X_{j+1} − X_j − ΔB_j = ½ ΔL_j n_j.
 */
constexpr double kPushPerLocalTime = 0.5;

//---------------------------------------------------------------------------//
//! Discretized reflecting Brownian path on a uniform time grid.
struct PathGrid
{
    int dimension = 2;
    double h = 0;
    std::uint64_t seed = 0;
    std::vector<Vec> states;       //!< X_0..X_n
    std::vector<Vec> dB;           //!< ΔB_0..ΔB_{n-1}
    std::vector<double> dL;        //!< ΔL_0..ΔL_{n-1}
    std::vector<Vec> normals;      //!< inward normal per step (zero when ΔL = 0)

    std::size_t n_steps() const { return dL.size(); }
    double time(std::size_t j) const { return static_cast<double>(j) * h; }
    //! X_{j+1} − X_j − ΔB_j
    Vec push(std::size_t j) const { return states[j + 1] - states[j] - dB[j]; }
    //! L_{t_j} = Σ_{i<j} ΔL_i
    double local_time(std::size_t j) const;
};

//---------------------------------------------------------------------------//
//! One-step simulator shared by the path builder and streaming estimators.
class ReflectingWalker
{
  public:
    ReflectingWalker(Domain const& domain, Vec x0, double h, CounterRng rng,
                     ReflectionScheme scheme = ReflectionScheme::projection);

    struct Step
    {
        Vec dB;
        double dL = 0;
        Vec normal;
    };

    //! Advance one step; state() becomes X_{j+1}.
    Step const& advance();
    Vec const& state() const { return x_; }
    double h() const { return h_; }

  private:
    Domain const& domain_;
    Vec x_;
    double h_;
    double sqrt_h_;
    CounterRng rng_;
    ReflectionScheme scheme_;
    Step step_;
};

//! Number of steps and effective step size covering [0, T].
std::pair<std::size_t, double> time_grid(double T, double h);

//! Throws StepTooLarge when h > (diameter/10)².
void check_step(Domain const& domain, double h);

//! Walker for path `seed`: increments use stream 1 of CounterRng(seed).
ReflectingWalker make_walker(Domain const& domain, Vec const& x0, double h, std::uint64_t seed,
                             ReflectionScheme scheme = ReflectionScheme::projection);
//! Uniform start for path `seed`, drawn from stream 0.
Vec uniform_start(Domain const& domain, std::uint64_t seed);

PathGrid simulate_path(Domain const& domain, Vec const& x0, double T, double h,
                       std::uint64_t seed,
                       ReflectionScheme scheme = ReflectionScheme::projection);
PathGrid simulate_path_uniform(Domain const& domain, double T, double h, std::uint64_t seed,
                               ReflectionScheme scheme = ReflectionScheme::projection);

//---------------------------------------------------------------------------//
using PathField = std::function<Vec(Vec const&)>;
using PathScalar = std::function<double(Vec const&)>;

//! Σ <field(X_j), ΔB_j> over j in [s, t).
double forward_ito(PathGrid const& path, PathField const& field, std::size_t s, std::size_t t);
double forward_ito(PathGrid const& path, PathField const& field);

//! Σ <field(X_{j+1}), −ΔB_j − n_j ΔL_j> over j in [s, t).
double backward_ito(PathGrid const& path, PathField const& field, std::size_t s, std::size_t t);
double backward_ito(PathGrid const& path, PathField const& field);

//! forward + backward + Σ <field(X_{j+1}), n_j> ΔL_j over j in [s, t).
double star_integral(PathGrid const& path, PathField const& field, std::size_t s, std::size_t t);
double star_integral(PathGrid const& path, PathField const& field);

/*!
 * w_j = exp(λ t_j + μ L_{t_j} + q_scale Σ_{i<j} q(X_i) h), j = 0..n.
 */
std::vector<double> weight_factors(PathGrid const& path, PathScalar const& q, double lambda,
                                   double mu, double q_scale = 1.0);

//! Σ_{j<n} field(X_j) h
double time_integral(PathGrid const& path, PathScalar const& field);

//---------------------------------------------------------------------------//
//! Binary dump: magic, dimension, step count, h, seed, then per node (t, X, ΔL).
void write_path_dump(PathGrid const& path, std::filesystem::path const& file);
PathGrid read_path_dump(std::filesystem::path const& file);

}  // namespace nbsde
