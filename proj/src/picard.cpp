#include "nbsde/picard.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nbsde/parallel.hpp"

namespace nbsde
{
PicardTrace run_picard(Domain const& domain, CoefficientSet const& coeffs,
                       StructureConstants const& consts, PicardOptions const& options)
{
    PicardTrace trace;
    try
    {
        trace.constants = choose_constants(consts, options.variant, options.analytic);
        trace.gamma = trace.constants.gamma;
    }
    catch (InadmissibleConstants const& e)
    {
        if (!options.override_admissibility)
            throw;
        trace.constants = consts;
        trace.gamma = std::numeric_limits<double>::quiet_NaN();
        trace.guarantee_void = true;
        trace.admissibility_message = e.what();
    }

    auto const space = FemSpace::create(build_mesh(domain, options.h_mesh));
    trace.iterates.push_back(zero_function(space));
    int consecutive = 0;
    for (int n = 1; n <= options.max_iter; ++n)
    {
        FemFunction const& prev = trace.iterates.back();
        QuadField const g = frozen_divergence_field(coeffs, prev);
        InnerSolveInfo info;
        FemFunction next = solve_semilinear_g_frozen(space, coeffs, g, options.inner, &info, &prev);
        double const inc = h1_distance(next, prev);
        trace.iterates.push_back(std::move(next));
        trace.inner.push_back(info);
        trace.increments.push_back(inc);
        trace.n_iterations = n;
        if (n >= 2)
        {
            double const before = trace.increments[static_cast<std::size_t>(n) - 2];
            double const ratio = before > 0 ? inc / before : 0.0;
            trace.ratios.push_back(ratio);
            consecutive = ratio > 1 ? consecutive + 1 : 0;
        }
        if (inc <= options.tol)
        {
            trace.converged = true;
            break;
        }
        if (consecutive >= 3)
        {
            if (!options.override_admissibility)
                throw NoContraction("increment ratios exceeded 1 for 3 consecutive iterations",
                                    std::move(trace));
            trace.guarantee_void = true;
        }
    }
    trace.final_residual = nonlinear_weak_residual(coeffs, trace.solution());
    return trace;
}

//---------------------------------------------------------------------------//
ContractionReport contraction_report(std::vector<double> const& increments, double gamma,
                                     double allowance)
{
    if (increments.size() < 2)
        throw TooFewIterates("contraction report needs at least 3 iterates (2 increments), got "
                             + std::to_string(increments.size()) + " increment(s)");
    ContractionReport r;
    r.gamma = gamma;
    r.allowance = allowance;
    for (std::size_t n = 1; n < increments.size(); ++n)
    {
        ContractionRow row;
        row.iteration = static_cast<int>(n) + 1;
        row.increment = increments[n];
        double const ratio = increments[n - 1] > 0 ? increments[n] / increments[n - 1] : 0.0;
        row.squared_ratio = ratio * ratio;
        row.exceeds_gamma = std::isfinite(gamma) && row.squared_ratio > gamma + allowance;
        r.any_exceeds_gamma = r.any_exceeds_gamma || row.exceeds_gamma;
        r.rows.push_back(row);
    }
    return r;
}

ContractionReport contraction_report(PicardTrace const& trace, double allowance)
{
    return contraction_report(trace.increments, trace.gamma, allowance);
}

std::vector<Estimate> weighted_increments(Domain const& domain, PicardTrace const& trace,
                                          CoefficientSet const& coeffs, McParams const& p)
{
    check_step(domain, p.h);
    auto const [n, h] = time_grid(p.T, p.h);
    std::size_t const m = trace.increments.size();
    double const lambda = trace.constants.lambda;
    double const mu = trace.constants.mu;
    std::vector<FemFunction> diffs;
    for (std::size_t k = 0; k < m; ++k)
        diffs.push_back({trace.iterates[k + 1].space,
                         trace.iterates[k + 1].values - trace.iterates[k].values});

    std::vector<std::vector<double>> samples(p.n_paths, std::vector<double>(m));
    parallel_for(p.n_paths, [&](std::size_t i) {
        std::uint64_t const seed = path_seed(p.seed, 0x3e16, i);
        Vec const x0 = uniform_start(domain, seed);
        ReflectingWalker walker = make_walker(domain, x0, h, seed, p.scheme);
        double qint = 0, L = 0;
        for (std::size_t j = 0; j < n; ++j)
        {
            Vec const& x = walker.state();
            double const qv = coeffs.eval_q(x);
            double const w = std::exp(lambda * h * static_cast<double>(j) + mu * L + 2 * qint);
            Point2 const pt(x[0], x[1]);
            for (std::size_t k = 0; k < m; ++k)
            {
                auto const [v, g] = diffs[k].sample(pt);
                samples[i][k] += w * (v * v + g.squaredNorm()) * h;
            }
            auto const& step = walker.advance();
            qint += qv * h;
            L += step.dL;
        }
    });
    std::vector<Estimate> out(m);
    for (std::size_t k = 0; k < m; ++k)
        for (auto const& s : samples)
            out[k].add(s[k]);
    return out;
}

void attach_weighted(ContractionReport& report, std::vector<Estimate> const& weighted)
{
    for (auto& row : report.rows)
    {
        auto const idx = static_cast<std::size_t>(row.iteration) - 1;
        if (idx < weighted.size())
            row.weighted_increment = weighted[idx].mean();
    }
}

void write_trace_csv(PicardTrace const& trace, std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out << "iteration,increment,ratio,residual\n";
    char buf[128];
    for (std::size_t n = 0; n < trace.increments.size(); ++n)
    {
        double const ratio = n ? trace.ratios[n - 1] : std::numeric_limits<double>::quiet_NaN();
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", n + 1, trace.increments[n],
                      ratio, trace.inner[n].residual);
        out << buf;
    }
}

nlohmann::json to_json(ContractionReport const& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (auto const& row : r.rows)
    {
        nlohmann::json j = {{"iteration", row.iteration},
                            {"increment", row.increment},
                            {"squared_ratio", row.squared_ratio},
                            {"exceeds_gamma", row.exceeds_gamma}};
        if (row.weighted_increment)
            j["weighted_increment"] = *row.weighted_increment;
        rows.push_back(j);
    }
    return {{"gamma", std::isfinite(r.gamma) ? nlohmann::json(r.gamma) : nlohmann::json(nullptr)},
            {"allowance", r.allowance},
            {"any_exceeds_gamma", r.any_exceeds_gamma},
            {"rows", rows}};
}

}  // namespace nbsde
