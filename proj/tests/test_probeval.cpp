#include <cmath>
#include <numbers>

#include <doctest.h>

#include "corpus.hpp"
#include "nbsde/errors.hpp"
#include "nbsde/mesh.hpp"
#include "nbsde/probeval.hpp"

using namespace nbsde;

namespace
{
PathScalar constant(double c)
{
    return [c](Vec const&) { return c; };
}

McParams params(std::size_t n, double T, double h, std::uint64_t seed = 1)
{
    McParams p;
    p.n_paths = n;
    p.T = T;
    p.h = h;
    p.seed = seed;
    return p;
}

Vec const center = Vec::Zero(2);
}  // namespace

TEST_SUITE("probeval")
{
    TEST_CASE("path seeds are deterministic and distinct")
    {
        CHECK(path_seed(1, 2, 3) == path_seed(1, 2, 3));
        CHECK(path_seed(1, 2, 3) != path_seed(1, 2, 4));
        CHECK(path_seed(1, 2, 3) != path_seed(1, 3, 3));
        CHECK(path_seed(1, 2, 3) != path_seed(2, 2, 3));
    }

    TEST_CASE("decay fit for a constant potential")
    {
        Domain const disk = Domain::disk();
        DecayFit const fit = fit_decay(disk, constant(-1), params(64, 4, 1e-3));
        CHECK(fit.theta == doctest::Approx(2).epsilon(1e-9));
        CHECK(fit.C == doctest::Approx(1).epsilon(1e-9));
        CHECK(fit.times.size() == fit.means.size());
        CHECK_THROWS_AS(fit_decay(disk, constant(0), params(64, 4, 1e-3)), AdmissibilityError);
    }

    TEST_CASE("tail bounds and horizon choice")
    {
        Domain const disk = Domain::disk();
        DecayFit fit;
        fit.C = 1.5;
        fit.theta = 2;
        CHECK(tail_bound_double(fit, 3) == doctest::Approx(1.5 / 2 * std::exp(-6)));
        double const b1 = tail_bound_single(fit, disk, 1, 1, 1);
        double const b2 = tail_bound_single(fit, disk, 1, 1, 2);
        CHECK(b2 == doctest::Approx(b1 * std::exp(-1)));
        double const T = choose_horizon(fit, disk, 1, 1, 0.01);
        CHECK(tail_bound_single(fit, disk, 1, 1, T) <= 0.001 * (1 + 1e-9));
        CHECK(tail_bound_single(fit, disk, 1, 1, 0.99 * T) > 0.001);
    }

    TEST_CASE("trivial Feynman-Kac values")
    {
        Domain const disk = Domain::disk();
        auto const zero = fk_pure_boundary(disk, center, constant(-1), constant(0), params(50, 2, 1e-3));
        CHECK(zero.estimate.mean() == 0);
        CHECK(zero.estimate.standard_error() == 0);
        auto const none = fk_linear_frozen(disk, center, constant(-1), constant(0), constant(0),
                                           params(50, 2, 1e-3));
        CHECK(none.estimate.mean() == 0);

        auto const one = fk_linear_frozen(disk, center, constant(-1), constant(1), nullptr,
                                          params(50, 10, 1e-3));
        CHECK(std::abs(one.estimate.mean() - 1)
              <= 3 * one.estimate.standard_error() + one.truncation_tail_bound + 1e-12);
    }

    TEST_CASE("pure boundary representation at the center")
    {
        Domain const disk = Domain::disk();
        McParams const p = params(600, 6, 1e-3, 5);
        auto const a = fk_pure_boundary(disk, center, constant(-1), constant(1), p);
        double const oracle = corpus::pure_boundary_solution(0);
        CHECK(oracle == doctest::Approx(0.7863344778588056).epsilon(1e-12));
        CHECK(std::abs(a.estimate.mean() - oracle) < 3 * a.estimate.standard_error() + 0.05);
        auto const b = fk_linear_frozen(disk, center, constant(-1), constant(0), constant(1), p);
        CHECK(b.estimate.mean() == a.estimate.mean());
        CHECK(b.estimate.standard_error() == a.estimate.standard_error());
    }

    TEST_CASE("conditions checker")
    {
        Domain const disk = Domain::disk();
        McParams const p = params(200, 8, 2e-3, 9);
        auto const stable = check_conditions_C(disk, constant(-1), p, center, center);
        CHECK(stable.grid_size == 16);
        double const c3 = 0.5 * (1 - std::exp(-16));
        CHECK(std::abs(stable.c3.value.mean() - c3) <= 3 * stable.c3.value.standard_error() + 1e-6);
        CHECK_FALSE(stable.c1.divergent);
        CHECK_FALSE(stable.c2.divergent);
        CHECK_FALSE(stable.c3.divergent);
        CHECK(std::abs(stable.c1.value.mean() - corpus::pure_boundary_solution(0) / kBoundaryCalibration)
              < 3 * stable.c1.value.standard_error() + 0.15);
        // Integrands are nonnegative, so the horizon-T value dominates the T/2 value
        CHECK(stable.c1.value.mean() >= stable.c1.half.mean());

        auto const flat = check_conditions_C(disk, constant(0), params(100, 4, 2e-3, 9), center, center);
        CHECK(flat.c1.divergent);
    }

    TEST_CASE("martingale residual vanishes for a constant solution")
    {
        Domain const disk = Domain::disk();
        auto const space = FemSpace::create(build_mesh(disk, 0.2));
        FemFunction const u = interpolate(space, [](Point2 const&) { return 1.5; });
        auto const coeffs = CoefficientSet::parse(2, "1.5", {"0", "0"}, "0", "-1");
        auto consts = corpus::corpus_constants(0);
        consts = choose_constants(consts, ConstantsVariant::probabilistic);
        ResidualReport const r = martingale_residual_test(disk, u, coeffs, consts, params(100, 0.5, 1e-3));
        CHECK(std::abs(r.residual.mean()) < 1e-12);
        CHECK(r.residual.standard_error() < 1e-12);
        CHECK(r.predicted_variance.mean() < 1e-20);
        CHECK(r.pass_mean);
    }

    TEST_CASE("martingale residual flags a wrong field")
    {
        Domain const disk = Domain::disk();
        auto const problem = corpus::manufactured().front();
        auto const consts = choose_constants(problem.consts, ConstantsVariant::probabilistic);
        auto const space = FemSpace::create(build_mesh(disk, 0.1));
        ResidualReport const r = martingale_residual_test(disk, zero_function(space), problem.coeffs,
                                                          consts, params(500, 0.5, 1e-3));
        CHECK_FALSE(r.passed());
        CHECK_FALSE(r.pass_mean);
        auto const j = to_json(r);
        CHECK(j.contains("residual"));
    }
}
