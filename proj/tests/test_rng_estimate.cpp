#include <cmath>
#include <vector>

#include <doctest.h>

#include "nbsde/estimate.hpp"
#include "nbsde/rng.hpp"

using namespace nbsde;

TEST_SUITE("rng")
{
    TEST_CASE("streams are pure functions of key and counter")
    {
        CounterRng a(123), b(123);
        for (int i = 0; i < 100; ++i)
            CHECK(a.next_u64() == b.next_u64());
        CounterRng c(123, 50);
        CounterRng d(123);
        for (int i = 0; i < 50; ++i)
            d.next_u64();
        CHECK(c.next_u64() == d.next_u64());
    }

    TEST_CASE("split streams differ and are reproducible")
    {
        CounterRng const root(9);
        CHECK(root.split(0).key() != root.split(1).key());
        CHECK(root.split(5).key() == CounterRng(9).split(5).key());
        CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    }

    TEST_CASE("uniform and normal moments")
    {
        CounterRng rng(2024);
        int const n = 200000;
        double su = 0, sn = 0, sn2 = 0;
        for (int i = 0; i < n; ++i)
        {
            double const u = rng.uniform();
            CHECK_UNARY(u > 0);
            CHECK_UNARY(u < 1);
            su += u;
            double const z = rng.normal();
            sn += z;
            sn2 += z * z;
        }
        CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
        CHECK(std::abs(sn / n) < 5 / std::sqrt(n));
        CHECK(std::abs(sn2 / n - 1) < 5 * std::sqrt(2.0 / n));
    }
}

TEST_SUITE("estimate")
{
    TEST_CASE("mean, variance and standard error")
    {
        std::vector<double> const xs = {1, 2, 3, 4};
        Estimate const e = Estimate::from_samples(xs);
        CHECK(e.mean() == doctest::Approx(2.5));
        CHECK(e.variance() == doctest::Approx(5.0 / 3));
        CHECK(e.standard_error() == doctest::Approx(std::sqrt(5.0 / 12)));
        CHECK(e.n_samples() == 4);
        CHECK(Estimate::exact(3).standard_error() == 0);
        CHECK(Estimate().variance() == 0);
    }

    TEST_CASE("merging any partition reproduces the pooled estimate")
    {
        CounterRng rng(5);
        std::vector<double> xs(1000);
        for (auto& x : xs)
            x = rng.normal() * 3 + 1;
        Estimate const whole = Estimate::from_samples(xs);
        for (std::size_t cut : {std::size_t(1), std::size_t(17), std::size_t(500), std::size_t(999)})
        {
            Estimate const a = Estimate::from_samples(std::span(xs).first(cut));
            Estimate const b = Estimate::from_samples(std::span(xs).subspan(cut));
            Estimate const ab = a.merged(b);
            Estimate const ba = b.merged(a);
            CHECK(ab.n_samples() == whole.n_samples());
            CHECK(ab.mean() == doctest::Approx(whole.mean()).epsilon(1e-13));
            CHECK(ab.standard_error() == doctest::Approx(whole.standard_error()).epsilon(1e-12));
            CHECK(ba.mean() == doctest::Approx(ab.mean()).epsilon(1e-14));
        }
        // Associativity over three blocks
        auto const s = std::span<double const>(xs);
        Estimate const a = Estimate::from_samples(s.first(100));
        Estimate const b = Estimate::from_samples(s.subspan(100, 300));
        Estimate const c = Estimate::from_samples(s.subspan(400));
        Estimate const left = a.merged(b).merged(c);
        Estimate const right = a.merged(b.merged(c));
        CHECK(left.mean() == doctest::Approx(right.mean()).epsilon(1e-14));
        CHECK(left.variance() == doctest::Approx(right.variance()).epsilon(1e-12));
        // Merging with an empty estimate is the identity
        CHECK(a.merged(Estimate()).mean() == a.mean());
        CHECK(Estimate().merged(a).variance() == a.variance());
    }

    TEST_CASE("variance estimate of normal samples")
    {
        CounterRng rng(6);
        std::vector<double> xs(20000);
        for (auto& x : xs)
            x = 2 * rng.normal();
        VarianceEstimate const v = estimate_variance(xs);
        CHECK(std::abs(v.variance - 4) < 4 * v.standard_error);
        // For normal data SE(var) ≈ σ²√(2/n)
        CHECK(v.standard_error == doctest::Approx(4 * std::sqrt(2.0 / 20000)).epsilon(0.1));
    }
}
