#include "nbsde/probeval.hpp"

#include <cmath>

#include "nbsde/errors.hpp"
#include "nbsde/parallel.hpp"
#include "nbsde/rng.hpp"

namespace nbsde
{
namespace
{
//! ∫_0^h e^{rate·s} ds
double exp_step(double rate, double h)
{
    return rate != 0 ? std::expm1(rate * h) / rate : h;
}

double local_time_rate(Domain const& domain)
{
    return domain.boundary_measure() / domain.volume();
}

double sup_abs_interior(Domain const& domain, PathScalar const& fn)
{
    double s = 0;
    for (Vec const& x : interior_grid(domain, 64, 0.99))
        s = std::max(s, std::abs(fn(x)));
    for (auto const& b : boundary_quadrature(domain, 64))
        s = std::max(s, std::abs(fn(b.node)));
    return s;
}

double sup_abs_boundary(Domain const& domain, PathScalar const& fn)
{
    double s = 0;
    for (auto const& b : boundary_quadrature(domain, 64))
        s = std::max(s, std::abs(fn(b.node)));
    return s;
}

Estimate reduce(std::vector<double> const& samples)
{
    return Estimate::from_samples(samples);
}

Point2 to_point(Vec const& v)
{
    return {v[0], v[1]};
}

Vec to_vec(Point2 const& p)
{
    Vec v(2);
    v << p.x(), p.y();
    return v;
}

McParams fit_params(Domain const& domain, McParams const& p)
{
    McParams f = p;
    f.n_paths = std::min<std::size_t>(p.n_paths, 256);
    double const limit = std::pow(domain.diameter() / 10, 2);
    f.h = std::min(std::max(p.h, 1e-3), limit);
    f.h = std::min(f.h, p.T);
    return f;
}

//! Weighted dt and dL integrals from one start point; values at T/2 and T.
struct WeightedSums
{
    double dt_half = 0, dl_half = 0;
    double dt = 0, dl = 0;
};

WeightedSums weighted_path(Domain const& domain, Vec const& x0, PathScalar const& q,
                           PathScalar const& F, PathScalar const& H, double q_scale,
                           McParams const& p, std::uint64_t seed)
{
    auto const [n, h] = time_grid(p.T, p.h);
    ReflectingWalker walker = make_walker(domain, x0, h, seed, p.scheme);
    WeightedSums s;
    double qint = 0;
    std::size_t const half = n / 2;
    for (std::size_t j = 0; j < n; ++j)
    {
        if (j == half)
        {
            s.dt_half = s.dt;
            s.dl_half = s.dl;
        }
        Vec const& x = walker.state();
        double const rate = q_scale * q(x);
        double const w = std::exp(qint);
        if (F)
            s.dt += w * F(x) * exp_step(rate, h);
        auto const& step = walker.advance();
        qint += rate * h;
        if (step.dL > 0 && H)
            s.dl += std::exp(qint) * H(walker.state()) * step.dL;
    }
    if (n == half)
    {
        s.dt_half = s.dt;
        s.dl_half = s.dl;
    }
    return s;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t master, std::uint64_t tag, std::size_t i)
{
    return derive_seed(mix64(master ^ mix64(tag + 0x51ed2701u)), i);
}

//---------------------------------------------------------------------------//
DecayFit fit_decay(Domain const& domain, PathScalar const& q, McParams const& p_in, int n_points)
{
    McParams const p = fit_params(domain, p_in);
    auto const [n, h] = time_grid(p.T, p.h);
    DecayFit fit;
    std::vector<std::size_t> index;
    for (int k = 0; k < n_points; ++k)
    {
        auto const idx = static_cast<std::size_t>(std::llround(static_cast<double>(n) / std::pow(2.0, k)));
        if (idx == 0 || (!index.empty() && idx == index.back()))
            break;
        index.push_back(idx);
        fit.times.push_back(static_cast<double>(idx) * h);
    }
    std::vector<std::vector<double>> samples(p.n_paths, std::vector<double>(index.size()));
    parallel_for(p.n_paths, [&](std::size_t i) {
        std::uint64_t const seed = path_seed(p.seed, 0xdecaf, i);
        ReflectingWalker walker = make_walker(domain, uniform_start(domain, seed), h, seed, p.scheme);
        double qint = 0;
        for (std::size_t j = 0; j < n; ++j)
        {
            qint += 2 * q(walker.state()) * h;
            walker.advance();
            for (std::size_t k = 0; k < index.size(); ++k)
                if (index[k] == j + 1)
                    samples[i][k] = std::exp(qint);
        }
    });
    // Least squares on ln m(t) including the exact point m(0) = 1.
    std::vector<double> ts{0.0}, ys{0.0};
    for (std::size_t k = 0; k < index.size(); ++k)
    {
        double m = 0;
        for (auto const& s : samples)
            m += s[k];
        m /= static_cast<double>(samples.size());
        fit.means.push_back(m);
        ts.push_back(fit.times[k]);
        ys.push_back(std::log(std::max(m, 1e-300)));
    }
    double const nn = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < ts.size(); ++k)
    {
        st += ts[k];
        sy += ys[k];
        stt += ts[k] * ts[k];
        sty += ts[k] * ys[k];
    }
    double const slope = (nn * sty - st * sy) / (nn * stt - st * st);
    double const intercept = (sy - slope * st) / nn;
    fit.theta = -slope;
    fit.C = std::exp(intercept);
    if (!(fit.theta > 1e-3))
        throw AdmissibilityError("E[exp(2∫q)] shows no exponential decay (theta = "
                                 + std::to_string(fit.theta) + "); q is too weak");
    // Make the fitted envelope dominate every observed point.
    for (std::size_t k = 0; k < fit.times.size(); ++k)
        fit.C = std::max(fit.C, fit.means[k] * std::exp(fit.theta * fit.times[k]));
    fit.C = std::max(fit.C, 1.0);
    return fit;
}

double tail_bound_single(DecayFit const& fit, Domain const& domain, double sup_f, double sup_h,
                         double T)
{
    double const rate = sup_f + kBoundaryCalibration * sup_h * local_time_rate(domain);
    return rate * std::sqrt(fit.C) * (2 / fit.theta) * std::exp(-fit.theta * T / 2);
}

double tail_bound_double(DecayFit const& fit, double T)
{
    return fit.C / fit.theta * std::exp(-fit.theta * T);
}

double choose_horizon(DecayFit const& fit, Domain const& domain, double sup_f, double sup_h,
                      double target_se)
{
    double const at_zero = tail_bound_single(fit, domain, sup_f, sup_h, 0);
    double const target = 0.1 * target_se;
    if (at_zero <= target)
        return 0;
    return 2 / fit.theta * std::log(at_zero / target);
}

//---------------------------------------------------------------------------//
std::vector<FkResult> fk_linear_frozen_points(Domain const& domain, std::vector<Vec> const& points,
                                              PathScalar const& q, PathScalar const& F,
                                              PathScalar const& H, McParams const& p)
{
    check_step(domain, p.h);
    double const sup_f = F ? sup_abs_interior(domain, F) : 0.0;
    double const sup_h = H ? sup_abs_boundary(domain, H) : 0.0;
    std::vector<FkResult> out(points.size());
    if (sup_f == 0 && sup_h == 0)
    {
        for (auto& r : out)
            r.estimate = Estimate::from_samples(std::vector<double>(p.n_paths, 0.0));
        return out;
    }
    DecayFit const fit = fit_decay(domain, q, p);
    double const tail = tail_bound_single(fit, domain, sup_f, sup_h, p.T);
    for (std::size_t k = 0; k < points.size(); ++k)
    {
        std::vector<double> samples(p.n_paths);
        parallel_for(p.n_paths, [&](std::size_t i) {
            auto const s = weighted_path(domain, points[k], q, F, H, 1.0, p, path_seed(p.seed, k, i));
            samples[i] = s.dt + kBoundaryCalibration * s.dl;
        });
        out[k] = {reduce(samples), tail, fit};
    }
    return out;
}

FkResult fk_linear_frozen(Domain const& domain, Vec const& x0, PathScalar const& q,
                          PathScalar const& F, PathScalar const& H, McParams const& p)
{
    return fk_linear_frozen_points(domain, {x0}, q, F, H, p).front();
}

FkResult fk_pure_boundary(Domain const& domain, Vec const& x0, PathScalar const& q,
                          PathScalar const& phi, McParams const& p)
{
    return fk_linear_frozen(domain, x0, q, nullptr, phi, p);
}

CalibrationResult calibrate_boundary_constant(Domain const& domain, double h_mesh,
                                              McParams const& p, double allowance)
{
    CalibrationResult c;
    auto const space = FemSpace::create(build_mesh(domain, h_mesh));
    CoefficientSet const coeffs = CoefficientSet::parse(2, "0", {}, "1", "-1");
    FemFunction const v = solve_semilinear_g_frozen(space, coeffs, {});
    c.fem_value = v.value_at(Point2::Zero());

    PathScalar const q = [](Vec const&) { return -1.0; };
    PathScalar const one = [](Vec const&) { return 1.0; };
    Vec const center = Vec::Zero(domain.dimension());
    check_step(domain, p.h);
    DecayFit const fit = fit_decay(domain, q, p);
    c.truncation_tail_bound = tail_bound_single(fit, domain, 0, 1, p.T) / kBoundaryCalibration;
    std::vector<double> samples(p.n_paths);
    parallel_for(p.n_paths, [&](std::size_t i) {
        samples[i] = weighted_path(domain, center, q, nullptr, one, 1.0, p,
                                   path_seed(p.seed, 0xca1b, i))
                         .dl;
    });
    c.raw = reduce(samples);
    double const m = c.raw.mean();
    c.fitted = c.fem_value / m;
    c.fitted_se = c.fem_value * c.raw.standard_error() / (m * m);
    double const trunc = c.fem_value * c.truncation_tail_bound / (m * m);
    c.consistent = std::abs(c.fitted - kBoundaryCalibration) <= 3 * c.fitted_se + trunc + allowance;
    return c;
}

//---------------------------------------------------------------------------//
ConditionsCReport check_conditions_C(Domain const& domain, PathScalar const& q, McParams const& p,
                                     Vec const& x0, Vec const& x1, int grid_points)
{
    check_step(domain, p.h);
    ConditionsCReport report;
    report.T = p.T;

    auto run = [&](Vec const& start, double q_scale, bool boundary, std::uint64_t tag) {
        std::vector<double> full(p.n_paths), half(p.n_paths), inc(p.n_paths);
        PathScalar const one = [](Vec const&) { return 1.0; };
        PathScalar const q2 = [&](Vec const& x) {
            double const v = q(x);
            return v * v;
        };
        parallel_for(p.n_paths, [&](std::size_t i) {
            auto const s = weighted_path(domain, start, q, boundary ? nullptr : q2,
                                         boundary ? one : nullptr, q_scale, p,
                                         path_seed(p.seed, tag, i));
            full[i] = boundary ? s.dl : s.dt;
            half[i] = boundary ? s.dl_half : s.dt_half;
            inc[i] = full[i] - half[i];
        });
        ConditionEstimate e;
        e.value = reduce(full);
        e.half = reduce(half);
        e.increment = reduce(inc);
        e.divergent = e.increment.mean()
                      > 0.05 * std::abs(e.value.mean()) + 3 * e.increment.standard_error();
        return e;
    };

    report.c1 = run(x0, 1.0, true, 0xc1);
    report.c2 = run(x1, 2.0, true, 0xc2);
    auto const grid = interior_grid(domain, grid_points);
    report.grid_size = grid.size();
    bool first = true;
    for (std::size_t k = 0; k < grid.size(); ++k)
    {
        ConditionEstimate e = run(grid[k], 2.0, false, 0xc300 + k);
        if (first || e.value.mean() > report.c3.value.mean())
        {
            report.c3 = e;
            report.c3_argmax = grid[k];
            first = false;
        }
        report.c3.divergent = report.c3.divergent || e.divergent;
    }
    return report;
}

//---------------------------------------------------------------------------//
ResidualReport martingale_residual_test(Domain const& domain, FemFunction const& u,
                                        CoefficientSet const& coeffs,
                                        StructureConstants const& consts, McParams const& p)
{
    coeffs.require_zero_drift();
    check_step(domain, p.h);
    if (domain.dimension() != 2)
        throw UnsupportedDomain("finite element fields are two-dimensional");
    auto const [n, h] = time_grid(p.T, p.h);
    std::size_t const half = n / 2;

    std::vector<double> residual(p.n_paths), predicted(p.n_paths), term_half(p.n_paths),
        term_full(p.n_paths);
    parallel_for(p.n_paths, [&](std::size_t i) {
        std::uint64_t const seed = path_seed(p.seed, 0x4e51d, i);
        Vec x = uniform_start(domain, seed);
        ReflectingWalker walker = make_walker(domain, x, h, seed, p.scheme);

        auto [u0, gu0] = u.sample(to_point(x));
        Vec z0 = to_vec(gu0);
        Vec g0 = coeffs.eval_g(x, u0, z0);
        double R = -u0, Q = 0, qint = 0, L = 0;
        for (std::size_t j = 0; j < n; ++j)
        {
            if (j == half)
                term_half[i] = std::exp(consts.lambda * h * static_cast<double>(j)
                                        + consts.mu * L + 2 * qint) * u0 * u0;
            double const qv = coeffs.eval_q(x);
            R += (qv * u0 + coeffs.eval_f(x, u0, z0)) * h;
            Q += z0.squaredNorm() * h;

            auto const& step = walker.advance();
            Vec const& x1 = walker.state();
            auto const [u1, gu1] = u.sample(to_point(x1));
            Vec const z1 = to_vec(gu1);
            Vec const g1 = coeffs.eval_g(x1, u1, z1);

            if (step.dL > 0)
            {
                Vec const push = x1 - x - step.dB;
                R -= z1.dot(push);
            }
            R += g0.dot(step.dB) + g1.dot(-step.dB - step.normal * step.dL)
                 + g1.dot(step.normal) * step.dL;

            qint += qv * h;
            L += step.dL;
            x = x1;
            u0 = u1;
            z0 = z1;
            g0 = g1;
        }
        if (half == n)
            term_half[i] = u0 * u0;
        R += u0;
        residual[i] = R;
        predicted[i] = Q;
        term_full[i] = std::exp(consts.lambda * p.T + consts.mu * L + 2 * qint) * u0 * u0;
    });

    ResidualReport r;
    r.residual = reduce(residual);
    r.residual_variance = estimate_variance(residual);
    r.predicted_variance = reduce(predicted);
    r.terminal_half = reduce(term_half).mean();
    r.terminal_full = reduce(term_full).mean();
    r.pass_mean = std::abs(r.residual.mean()) <= 3 * r.residual.standard_error();
    double const var_se = std::hypot(r.residual_variance.standard_error,
                                     r.predicted_variance.standard_error());
    r.pass_variance = std::abs(r.residual_variance.variance - r.predicted_variance.mean())
                      <= 3 * var_se;
    r.pass_terminal = r.terminal_full < r.terminal_half || r.terminal_half == 0;
    return r;
}

nlohmann::json to_json(ResidualReport const& r)
{
    return {{"residual", to_json(r.residual)},
            {"residual_variance", r.residual_variance.variance},
            {"residual_variance_se", r.residual_variance.standard_error},
            {"predicted_variance", to_json(r.predicted_variance)},
            {"terminal_half", r.terminal_half},
            {"terminal_full", r.terminal_full},
            {"pass_mean", r.pass_mean},
            {"pass_variance", r.pass_variance},
            {"pass_terminal", r.pass_terminal}};
}

nlohmann::json to_json(ConditionsCReport const& r)
{
    auto cond = [](ConditionEstimate const& e) {
        return nlohmann::json{{"estimate", to_json(e.value)},
                              {"half_horizon", to_json(e.half)},
                              {"increment", to_json(e.increment)},
                              {"divergent", e.divergent}};
    };
    return {{"horizon", r.T},
            {"C1", cond(r.c1)},
            {"C2", cond(r.c2)},
            {"C3", cond(r.c3)},
            {"C3_grid_max_over", r.grid_size}};
}

}  // namespace nbsde
