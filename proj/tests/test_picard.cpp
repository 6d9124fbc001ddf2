#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "corpus.hpp"
#include "nbsde/errors.hpp"
#include "nbsde/picard.hpp"

using namespace nbsde;

namespace
{
PicardOptions options(double h)
{
    PicardOptions o;
    o.h_mesh = h;
    return o;
}

double error_of(PicardTrace const& t)
{
    return h1_error(t.solution(), corpus::exact, corpus::exact_gradient);
}
}  // namespace

TEST_SUITE("picard")
{
    TEST_CASE("g independent of the solution converges in two steps")
    {
        auto const p = corpus::manufactured()[0];
        PicardTrace const t = run_picard(Domain::disk(), p.coeffs, p.consts, options(0.1));
        CHECK(t.converged);
        CHECK(t.n_iterations == 2);
        CHECK(t.increments.size() == 2);
        CHECK(t.ratios.size() == 1);
        CHECK(t.increments[1] <= 1e-8);
        CHECK(t.ratios[0] < 1e-6);
        CHECK(t.gamma == 0);
        CHECK(t.iterates.size() == 3);
        CHECK(h1_distance(t.iterates[2], t.iterates[1]) <= 1e-8);
    }

    TEST_CASE("solution-dependent divergence term contracts")
    {
        auto const p = corpus::manufactured()[1];
        double prev_err = 0;
        for (double h : {0.1, 0.05})
        {
            PicardTrace const t = run_picard(Domain::disk(), p.coeffs, p.consts, options(h));
            CHECK(t.converged);
            CHECK(t.increments.back() <= 1e-8);
            REQUIRE(t.ratios.size() + 1 == t.increments.size());
            for (double r : t.ratios)
                CHECK(r * r < 1);
            CHECK(t.final_residual < 1e-8);
            double const err = error_of(t);
            CHECK(err < 1.5 * h);
            if (prev_err > 0)
                CHECK(prev_err / err >= 1.8);
            prev_err = err;

            ContractionReport const rep = contraction_report(t);
            CHECK(rep.rows.size() == t.increments.size() - 1);
            CHECK(rep.gamma == doctest::Approx(t.constants.gamma));

            // One more outer step from the converged iterate changes it by at most tol
            QuadField const g = frozen_divergence_field(p.coeffs, t.solution());
            FemFunction const next = solve_semilinear_g_frozen(t.solution().space, p.coeffs, g, {},
                                                               nullptr, &t.solution());
            CHECK(h1_distance(next, t.solution()) <= 1e-8);
        }
    }

    TEST_CASE("inadmissible constants")
    {
        auto p = corpus::manufactured()[1];
        p.consts.k = 0.5;
        CHECK_THROWS_AS(run_picard(Domain::disk(), p.coeffs, p.consts, options(0.1)),
                        InadmissibleConstants);
        auto o = options(0.1);
        o.override_admissibility = true;
        PicardTrace const t = run_picard(Domain::disk(), p.coeffs, p.consts, o);
        CHECK(t.guarantee_void);
        CHECK(t.admissibility_message.find("k < 1/(2√2)") != std::string::npos);
        CHECK(std::isnan(t.gamma));
    }

    TEST_CASE("a strongly solution-dependent divergence does not contract")
    {
        auto const coeffs = CoefficientSet::parse(2, "1 - y", {"2*z1", "2*z2"}, "-y", "-1");
        auto consts = corpus::corpus_constants(0.1);
        auto o = options(0.1);
        o.max_iter = 30;
        try
        {
            run_picard(Domain::disk(), coeffs, consts, o);
            FAIL("expected NoContraction");
        }
        catch (NoContraction const& e)
        {
            CHECK(e.trace().ratios.size() >= 3);
            CHECK(e.trace().ratios.back() > 1);
        }
        o.override_admissibility = true;
        o.max_iter = 8;
        PicardTrace const t = run_picard(Domain::disk(), coeffs, consts, o);
        CHECK(t.guarantee_void);
        CHECK_FALSE(t.converged);
    }

    TEST_CASE("contraction report")
    {
        ContractionReport const r = contraction_report({1, 0.2, 0.04}, 0.1);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[0].squared_ratio == doctest::Approx(0.04));
        CHECK(r.rows[1].squared_ratio == doctest::Approx(0.04));
        CHECK(r.rows[0].iteration == 2);
        CHECK_FALSE(r.any_exceeds_gamma);
        CHECK(contraction_report({1, 0.5}, 0.1).any_exceeds_gamma);
        CHECK_FALSE(contraction_report({1, 0.5}, 0.1, 0.2).any_exceeds_gamma);
        CHECK_THROWS_AS(contraction_report({1}, 0.1), TooFewIterates);
        CHECK_THROWS_AS(contraction_report(std::vector<double>{}, 0.1), TooFewIterates);
    }

    TEST_CASE("weighted increments and trace output")
    {
        auto const p = corpus::manufactured()[1];
        PicardTrace const t = run_picard(Domain::disk(), p.coeffs, p.consts, options(0.1));
        McParams mc;
        mc.n_paths = 64;
        mc.T = 2;
        mc.h = 2e-3;
        auto const w = weighted_increments(Domain::disk(), t, p.coeffs, mc);
        REQUIRE(w.size() == t.increments.size());
        CHECK(w[0].mean() > 0);
        CHECK(w[1].mean() < w[0].mean());
        ContractionReport rep = contraction_report(t);
        attach_weighted(rep, w);
        CHECK(rep.rows[0].weighted_increment.has_value());
        CHECK(to_json(rep).at("rows").size() == rep.rows.size());

        auto const file = std::filesystem::temp_directory_path() / "nbsde_unit_trace.csv";
        write_trace_csv(t, file);
        std::ifstream in(file);
        std::string header;
        std::getline(in, header);
        CHECK(header == "iteration,increment,ratio,residual");
        int rows = 0;
        for (std::string line; std::getline(in, line);)
            ++rows;
        CHECK(rows == t.n_iterations);
    }
}
