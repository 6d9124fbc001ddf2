#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "nbsde/errors.hpp"
#include "nbsde/estimate.hpp"
#include "nbsde/parallel.hpp"
#include "nbsde/reflect.hpp"

using namespace nbsde;

namespace
{
Vec v2(double a, double b)
{
    return make_vec({a, b});
}

PathField constant_field(Vec c)
{
    return [c](Vec const&) { return c; };
}

PathField const identity = [](Vec const& x) { return x; };

template<class F>
Estimate over_paths(Domain const& d, std::size_t n, double T, double h, std::uint64_t seed, F&& fn)
{
    std::vector<double> s(n);
    parallel_for(n, [&](std::size_t i) { s[i] = fn(simulate_path_uniform(d, T, h, seed + i)); });
    return Estimate::from_samples(s);
}
}  // namespace

TEST_SUITE("reflect")
{
    TEST_CASE("pathwise invariants")
    {
        for (Domain const& d : {Domain::disk(), Domain::ball(3), Domain::ellipse(1.5, 0.5)})
        {
            for (std::uint64_t seed = 0; seed < 20; ++seed)
            {
                PathGrid const p = simulate_path_uniform(d, 1, 1e-3, seed);
                REQUIRE(p.states.size() == p.n_steps() + 1);
                for (auto const& x : p.states)
                    CHECK(contains(d, x) != Membership::exterior);
                for (std::size_t j = 0; j < p.n_steps(); ++j)
                {
                    CHECK(p.dL[j] >= 0);
                    if (p.dL[j] == 0)
                    {
                        CHECK(p.push(j).norm() < 1e-15);
                        CHECK(p.normals[j].norm() == 0);
                    }
                    else
                    {
                        CHECK((p.push(j) - kPushPerLocalTime * p.dL[j] * p.normals[j]).norm() < 1e-12);
                        CHECK(std::abs(p.normals[j].norm() - 1) < 1e-12);
                    }
                }
            }
        }
    }

    TEST_CASE("reflection only happens when the proposal leaves the domain")
    {
        Domain const d = Domain::disk();
        PathGrid const p = simulate_path(d, v2(0.5, 0), 2, 1e-3, 3);
        int reflections = 0;
        for (std::size_t j = 0; j < p.n_steps(); ++j)
        {
            Vec const proposal = p.states[j] + p.dB[j];
            bool const outside = contains(d, proposal) == Membership::exterior;
            CHECK(outside == (p.dL[j] > 0));
            reflections += outside;
            if (outside)
            {
                Projection const pr = project_to_boundary(d, proposal);
                CHECK(p.dL[j] == doctest::Approx(pr.distance / kPushPerLocalTime));
            }
        }
        CHECK(reflections > 0);
    }

    TEST_CASE("determinism and trivial horizon")
    {
        Domain const d = Domain::disk();
        PathGrid const a = simulate_path(d, v2(0.1, 0.2), 1, 1e-3, 99);
        PathGrid const b = simulate_path(d, v2(0.1, 0.2), 1, 1e-3, 99);
        CHECK(a.states == b.states);
        CHECK(a.dL == b.dL);
        PathGrid const c = simulate_path(d, v2(0.1, 0.2), 1, 1e-3, 100);
        CHECK(c.states != a.states);
        PathGrid const zero = simulate_path(d, v2(0.1, 0.2), 0, 1e-3, 1);
        CHECK(zero.states.size() == 1);
        CHECK(zero.local_time(0) == 0);
    }

    TEST_CASE("step and index errors")
    {
        Domain const d = Domain::disk();
        CHECK_THROWS_AS(simulate_path(d, v2(0, 0), 0.5, 1, 1), StepTooLarge);
        CHECK_THROWS_AS(check_step(d, 0.1), StepTooLarge);
        CHECK_NOTHROW(check_step(d, 0.01));
        PathGrid const p = simulate_path(d, v2(0, 0), 0.1, 1e-3, 1);
        CHECK_THROWS_AS(forward_ito(p, identity, 5, 5), IndexOrder);
        CHECK_THROWS_AS(backward_ito(p, identity, 6, 5), IndexOrder);
        CHECK_THROWS_AS(star_integral(p, identity, 0, p.n_steps() + 1), IndexOrder);
    }

    TEST_CASE("stochastic integrals of constant fields")
    {
        Domain const d = Domain::disk();
        Vec const c = v2(0.7, -1.3);
        for (std::uint64_t seed = 0; seed < 50; ++seed)
        {
            PathGrid const p = simulate_path_uniform(d, 1, 1e-3, seed);
            double sum_db = 0, boundary = 0;
            for (std::size_t j = 0; j < p.n_steps(); ++j)
            {
                sum_db += c.dot(p.dB[j]);
                boundary += c.dot(p.normals[j]) * p.dL[j];
            }
            double const fwd = forward_ito(p, constant_field(c));
            double const bwd = backward_ito(p, constant_field(c));
            CHECK(fwd == doctest::Approx(sum_db).epsilon(1e-12));
            CHECK(bwd == doctest::Approx(-sum_db - boundary).epsilon(1e-12));
            CHECK(std::abs(fwd + bwd + boundary) < 1e-12);
            CHECK(std::abs(star_integral(p, constant_field(c))) < 1e-12);
            CHECK(forward_ito(p, constant_field(Vec::Zero(2))) == 0);
            CHECK(backward_ito(p, constant_field(Vec::Zero(2))) == 0);
            // Sub-interval additivity
            std::size_t const mid = p.n_steps() / 3;
            CHECK(forward_ito(p, identity, 0, mid) + forward_ito(p, identity, mid, p.n_steps())
                  == doctest::Approx(forward_ito(p, identity)).epsilon(1e-12));
        }
    }

    TEST_CASE("forward and backward sums differ by covariation and boundary terms")
    {
        Domain const d = Domain::disk();
        PathField const f = [](Vec const& x) { return v2(std::sin(3 * x[0]), x[0] * x[1]); };
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            PathGrid const p = simulate_path_uniform(d, 0.5, 1e-3, seed);
            double correction = 0;
            for (std::size_t j = 0; j < p.n_steps(); ++j)
            {
                Vec const a = f(p.states[j]), b = f(p.states[j + 1]);
                correction += (a - b).dot(p.dB[j]) - b.dot(p.normals[j]) * p.dL[j];
            }
            CHECK(forward_ito(p, f) + backward_ito(p, f) == doctest::Approx(correction).epsilon(1e-10));
        }
    }

    TEST_CASE("weight factors")
    {
        Domain const d = Domain::disk();
        PathGrid const p = simulate_path_uniform(d, 1, 1e-2, 4);
        auto const ones = weight_factors(p, [](Vec const&) { return 0.0; }, 0, 0);
        for (double w : ones)
            CHECK(w == 1);
        auto const decay = weight_factors(p, [](Vec const&) { return -1.0; }, 0, 0);
        for (std::size_t j = 0; j < decay.size(); ++j)
            CHECK(decay[j] == doctest::Approx(std::exp(-p.time(j))).epsilon(1e-13));
        auto const mono = weight_factors(p, [](Vec const& x) { return -x.squaredNorm(); }, -0.5, -1);
        for (std::size_t j = 1; j < mono.size(); ++j)
            CHECK(mono[j] <= mono[j - 1]);
    }

    TEST_CASE("path dump round trip")
    {
        Domain const d = Domain::ball(3);
        PathGrid const p = simulate_path_uniform(d, 0.2, 1e-3, 8);
        auto const file = std::filesystem::temp_directory_path() / "nbsde_unit_path.bin";
        write_path_dump(p, file);
        PathGrid const r = read_path_dump(file);
        CHECK(r.states == p.states);
        CHECK(r.dL == p.dL);
        CHECK(r.h == p.h);
        CHECK(r.seed == p.seed);
    }

    TEST_CASE("local-time rate under a uniform start")
    {
        Domain const disk = Domain::disk();
        Estimate const e = over_paths(disk, 1000, 1, 1e-3, 1000,
                                      [](PathGrid const& p) { return p.local_time(p.n_steps()); });
        CHECK(std::abs(e.mean() - 2) < 3 * e.standard_error() + 0.15);
    }

    TEST_CASE("penalization scheme agrees with projection on the local-time rate")
    {
        Domain const disk = Domain::disk();
        std::vector<double> s(400);
        parallel_for(s.size(), [&](std::size_t i) {
            PathGrid const p = simulate_path_uniform(disk, 1, 1e-4, 500 + i, ReflectionScheme::penalization);
            s[i] = p.local_time(p.n_steps());
        });
        Estimate const e = Estimate::from_samples(s);
        CHECK(std::abs(e.mean() - 2) < 3 * e.standard_error() + 0.3);
    }

    TEST_CASE("divergence identity and its step-size bias")
    {
        Domain const disk = Domain::disk();
        auto star_of = [&](PathField const& g, double h) {
            return over_paths(disk, 2000, 1, h, 77, [&](PathGrid const& p) { return star_integral(p, g); });
        };
        Estimate const coarse = star_of(identity, 1e-3);
        Estimate const fine = star_of(identity, 2.5e-4);
        CHECK(std::abs(fine.mean() + 2) < std::abs(coarse.mean() + 2));
        CHECK(std::abs(fine.mean() + 2) < 3 * fine.standard_error() + 0.05);

        PathField const rotation = [](Vec const& x) { return v2(x[1], -x[0]); };
        Estimate const rot = star_of(rotation, 1e-3);
        CHECK(std::abs(rot.mean()) < 3 * rot.standard_error() + 0.01);
    }

    TEST_CASE("forward integral variance matches the time quadrature of |grad u|^2")
    {
        Domain const disk = Domain::disk();
        PathField const grad = [](Vec const& x) { return Vec(2 * x); };
        std::vector<double> fwd(2000), qv(2000);
        parallel_for(fwd.size(), [&](std::size_t i) {
            PathGrid const p = simulate_path_uniform(disk, 1, 1e-3, 3000 + i);
            fwd[i] = forward_ito(p, grad);
            qv[i] = time_integral(p, [](Vec const& x) { return 4 * x.squaredNorm(); });
        });
        VarianceEstimate const v = estimate_variance(fwd);
        Estimate const pred = Estimate::from_samples(qv);
        CHECK(std::abs(v.variance - pred.mean())
              < 3 * std::hypot(v.standard_error, pred.standard_error()));
    }
}
