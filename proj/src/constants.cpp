#include "nbsde/constants.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "nbsde/errors.hpp"
#include "nbsde/rng.hpp"

namespace nbsde
{
namespace
{
std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_vec(Vec const& v)
{
    std::string s = "(";
    for (int i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + fmt(v[i]);
    return s + ")";
}

void require_base(StructureConstants const& c)
{
    if (!(c.alpha > 0))
        throw InadmissibleConstants("alpha > 0 violated");
    if (!(c.beta > 0))
        throw InadmissibleConstants("beta > 0 violated");
    if (c.K < 0 || c.M < 0 || c.k < 0 || c.beta_prime < 0 || c.C0 < 0)
        throw InadmissibleConstants("constants K, M, k, beta', C0 must be nonnegative");
    if (!(c.K * c.K < 2 * c.alpha))
        throw InadmissibleConstants("K^2 < 2*alpha violated (K^2 = " + fmt(c.K * c.K)
                                    + ", 2*alpha = " + fmt(2 * c.alpha) + ")");
    if (!(c.k < k_threshold()))
        throw InadmissibleConstants("k < 1/(2√2) ≈ 0.35355 violated (k = " + fmt(c.k) + ")");
}

void post_check(StructureConstants const& c)
{
    double const lo = -2 * c.alpha + c.K * c.K;
    if (!(c.lambda > lo && c.lambda < 0))
        throw InadmissibleConstants("-2*alpha + K^2 < lambda < 0 violated (lambda = "
                                    + fmt(c.lambda) + "); alpha is not large enough");
    if (!(c.mu > -2 * c.beta && c.mu < 0))
        throw InadmissibleConstants("-2*beta < mu < 0 violated");
    if (!(c.gamma < 1))
        throw InadmissibleConstants("gamma < 1 violated (gamma = " + fmt(c.gamma) + ")");
}

StructureConstants probabilistic(StructureConstants c)
{
    double const s2 = std::numbers::sqrt2;
    double const alpha_min = s2 / 2 * c.k + c.K * c.K / (1 - 2 * s2 * c.k);
    if (!(c.alpha > alpha_min))
        throw InadmissibleConstants("alpha > (√2/2)k + K^2/(1-2√2k) violated (needs alpha > "
                                    + fmt(alpha_min) + ")");
    c.eps1 = (1 - 2 * s2 * c.k) / 2;
    c.eps2 = (1 - c.eps1) / 2;
    c.eps3 = 0;
    c.lambda = -2 * c.alpha + c.K * c.K / c.eps1 + (1 - c.eps1) / 2;
    c.mu = -c.beta;
    c.gamma = 2 * c.k * c.k / (c.eps2 * (1 - c.eps1 - c.eps2));
    return c;
}

StructureConstants analytic(StructureConstants c, AnalyticInputs const& in)
{
    if (!c.trace_norm)
        throw InadmissibleConstants("analytic recipe needs the trace-operator norm");
    double const tau = (1 - 2 * std::numbers::sqrt2 * c.k) / 4;
    double const mb2 = in.drift_sup * in.drift_sup;
    c.eps3 = tau;
    c.eps1 = mb2 > 0 ? tau / mb2 : tau;
    c.eps2 = (1 - 2 * tau) / 2;
    double const s = 1 - 2 * tau - c.eps2;
    double const lhs = s + 2 * (-c.alpha + in.q_sup + c.beta_prime * *c.trace_norm)
                       + mb2 / tau + c.K * c.K / tau;
    if (!(lhs < 0))
        throw InadmissibleConstants(
            "1 - M^2 eps1 - eps2 - eps3 + 2(-alpha + M1 + beta'|Tr|) + 1/eps1 + K^2/eps3 < 0 "
            "violated (value "
            + fmt(lhs) + "); alpha is not large enough");
    c.gamma = 2 * c.k * c.k / (c.eps2 * s);
    c.lambda = (-2 * c.alpha + c.K * c.K) / 2;
    c.mu = -c.beta;
    return c;
}

//---------------------------------------------------------------------------//
class Tracker
{
  public:
    Tracker(std::string name, double tol) : tol_(tol) { result_.name = std::move(name); }

    template<class F>
    void check(F&& compute, std::function<std::string()> const& describe)
    {
        ++result_.n_checked;
        double excess;
        try
        {
            excess = compute();
        }
        catch (Error const& e)
        {
            fail(std::numeric_limits<double>::infinity(), describe() + ": " + e.what());
            return;
        }
        if (excess > result_.worst_excess)
        {
            result_.worst_excess = excess;
            result_.worst_sample = describe();
        }
        if (!(excess <= tol_))
            result_.passed = false;
    }

    ConditionResult const& result() const { return result_; }

  private:
    void fail(double excess, std::string what)
    {
        result_.passed = false;
        result_.worst_excess = excess;
        result_.worst_sample = std::move(what);
    }

    double tol_;
    ConditionResult result_;
};

Vec random_vec(CounterRng& rng, int dim, double box)
{
    Vec v(dim);
    for (int i = 0; i < dim; ++i)
        v[i] = box * (2 * rng.uniform() - 1);
    return v;
}

Vec random_direction(CounterRng& rng, int dim)
{
    Vec v(dim);
    do
    {
        for (int i = 0; i < dim; ++i)
            v[i] = rng.normal();
    } while (v.norm() < 1e-8);
    return v / v.norm();
}

}  // namespace

double k_threshold()
{
    return 1 / (2 * std::numbers::sqrt2);
}

StructureConstants choose_constants(StructureConstants consts,
                                    ConstantsVariant variant,
                                    AnalyticInputs const& analytic_inputs)
{
    require_base(consts);
    StructureConstants c = variant == ConstantsVariant::probabilistic
                               ? probabilistic(consts)
                               : analytic(consts, analytic_inputs);
    post_check(c);
    return c;
}

//---------------------------------------------------------------------------//
bool StructureReport::all_passed() const
{
    for (auto const& c : conditions)
        if (!c.passed)
            return false;
    return true;
}

ConditionResult const* StructureReport::find(std::string const& name) const
{
    for (auto const& c : conditions)
        if (c.name == name)
            return &c;
    return nullptr;
}

StructureReport validate_structure(Domain const& domain,
                                   CoefficientSet const& coeffs,
                                   StructureConstants const& consts,
                                   ValidationOptions const& options)
{
    int const dim = coeffs.dimension;
    double const tol = 1e-6;
    Tracker c1("(i)", tol), c2("(ii)", tol), c3("(iii)", tol), c4("(iv)", tol),
        c5("(v)", tol), c6("(vi)", tol), c7("(vii)", tol);

    auto const& cf = coeffs;
    auto cond_i = [&](Vec const& x, double y, double y2, Vec const& z) {
        c1.check(
            [&] {
                double const d = y - y2;
                return d * (cf.eval_f(x, y, z) - cf.eval_f(x, y2, z)) / (d * d) + consts.alpha;
            },
            [&] { return "x=" + fmt_vec(x) + " y=" + fmt(y) + " y'=" + fmt(y2) + " z=" + fmt_vec(z); });
    };
    auto cond_ii = [&](Vec const& xb, double y, double y2) {
        c2.check(
            [&] {
                double const d = y - y2;
                return d * (cf.eval_h(xb, y) - cf.eval_h(xb, y2)) / (d * d) + consts.beta;
            },
            [&] { return "x=" + fmt_vec(xb) + " y=" + fmt(y) + " y'=" + fmt(y2); });
    };
    auto cond_iii = [&](Vec const& x, double y, Vec const& z, Vec const& z2) {
        c3.check(
            [&] {
                return std::abs(cf.eval_f(x, y, z) - cf.eval_f(x, y, z2)) / (z - z2).norm()
                       - consts.K;
            },
            [&] { return "x=" + fmt_vec(x) + " y=" + fmt(y) + " z=" + fmt_vec(z) + " z'=" + fmt_vec(z2); });
    };
    auto cond_iv = [&](Vec const& x, Vec const& xb, double y, Vec const& z) {
        double const delta = 1e-9;
        c4.check(
            [&] {
                double const f0 = cf.eval_f(x, y, z);
                double const df = std::abs(cf.eval_f(x, y + delta, z) - f0);
                double const h0 = cf.eval_h(xb, y);
                double const dh = std::abs(cf.eval_h(xb, y + delta) - h0);
                return std::max(df - 1e-4 * (1 + std::abs(f0)), dh - 1e-4 * (1 + std::abs(h0)));
            },
            [&] { return "x=" + fmt_vec(x) + " y=" + fmt(y) + " z=" + fmt_vec(z); });
    };
    auto cond_v = [&](Vec const& x, Vec const& xb, double y, Vec const& z) {
        c5.check(
            [&] {
                double const ef = std::abs(cf.eval_f(x, y, z)) / (1 + std::abs(y) + z.norm());
                double const eh = std::abs(cf.eval_h(xb, y)) / (1 + std::abs(y));
                double const eg = cf.eval_g(x, y, z).norm();
                return std::max({ef, eh, eg}) - consts.M;
            },
            [&] { return "x=" + fmt_vec(x) + " y=" + fmt(y) + " z=" + fmt_vec(z); });
    };
    auto cond_vi = [&](Vec const& x, double y, double y2, Vec const& z, Vec const& z2) {
        c6.check(
            [&] {
                double const denom = std::abs(y - y2) + (z - z2).norm();
                return (cf.eval_g(x, y, z) - cf.eval_g(x, y2, z2)).norm() / denom - consts.k;
            },
            [&] {
                return "x=" + fmt_vec(x) + " y=" + fmt(y) + " y'=" + fmt(y2) + " z=" + fmt_vec(z)
                       + " z'=" + fmt_vec(z2);
            });
    };
    auto cond_vii = [&](Vec const& xb, double y, double y2) {
        c7.check(
            [&] {
                return std::abs(cf.eval_h(xb, y) - cf.eval_h(xb, y2)) / std::abs(y - y2)
                       - consts.beta_prime;
            },
            [&] { return "x=" + fmt_vec(xb) + " y=" + fmt(y) + " y'=" + fmt(y2); });
    };

    CounterRng rng(options.seed);
    double const eta = options.probe_eta;
    auto run_sample = [&](Vec const& x, Vec const& xb, double y, double y2, Vec const& z,
                          Vec const& z2, Vec const& dir) {
        Vec const zp = z + eta * dir;
        if (y != y2)
        {
            cond_i(x, y, y2, z);
            cond_ii(xb, y, y2);
            cond_vii(xb, y, y2);
        }
        cond_i(x, y, y + eta, z);
        cond_ii(xb, y, y + eta);
        cond_vii(xb, y, y + eta);
        if ((z - z2).norm() > 0)
            cond_iii(x, y, z, z2);
        cond_iii(x, y, z, zp);
        cond_iv(x, xb, y, z);
        cond_v(x, xb, y, z);
        if (std::abs(y - y2) + (z - z2).norm() > 0)
            cond_vi(x, y, y2, z, z2);
        cond_vi(x, y, y + eta, z, z);
        cond_vi(x, y, y, z, zp);
    };

    auto boundary_point = [&](Vec const& x) {
        return project_to_boundary(domain, x).foot;
    };

    {
        Vec const x = interior_grid(domain, 1)[0];
        Vec const zero = Vec::Zero(dim);
        run_sample(x, boundary_point(x), 0.0, 0.0, zero, zero, random_direction(rng, dim));
    }
    for (int s = 0; s < options.budget; ++s)
    {
        Vec const x = sample_uniform(domain, rng);
        Vec const xb = boundary_point(sample_uniform(domain, rng));
        double const y = options.box * (2 * rng.uniform() - 1);
        double const y2 = options.box * (2 * rng.uniform() - 1);
        Vec const z = random_vec(rng, dim, options.box);
        Vec const z2 = random_vec(rng, dim, options.box);
        run_sample(x, xb, y, y2, z, z2, random_direction(rng, dim));
    }

    StructureReport report;
    for (Tracker const* t : {&c1, &c2, &c3, &c4, &c5, &c6, &c7})
        report.conditions.push_back(t->result());

    ConditionResult kk;
    kk.name = "K^2<2alpha";
    kk.n_checked = 1;
    kk.worst_excess = consts.K * consts.K - 2 * consts.alpha;
    kk.passed = kk.worst_excess < 0;
    kk.worst_sample = "K=" + fmt(consts.K) + " alpha=" + fmt(consts.alpha);
    report.conditions.push_back(kk);

    report.notes.push_back(
        "sampling-based falsification: a pass is evidence from " + std::to_string(options.budget)
        + " random samples in the box [-" + fmt(options.box) + ", " + fmt(options.box)
        + "], not a proof");
    report.notes.push_back(
        "the analytic existence theorem is stated with k < 1/2 but its proof needs "
        "k < 1/(2√2); the stricter bound is enforced");
    return report;
}

nlohmann::json to_json(StructureConstants const& c)
{
    nlohmann::json j = {{"alpha", c.alpha},
                        {"beta", c.beta},
                        {"K", c.K},
                        {"M", c.M},
                        {"k", c.k},
                        {"beta_prime", c.beta_prime},
                        {"C0", c.C0},
                        {"lambda", c.lambda},
                        {"mu", c.mu},
                        {"eps1", c.eps1},
                        {"eps2", c.eps2},
                        {"eps3", c.eps3},
                        {"gamma", c.gamma}};
    if (c.trace_norm)
    {
        j["trace_norm"] = *c.trace_norm;
        j["trace_norm_source"] = c.trace_norm_source;
    }
    if (!c.notes.empty())
        j["notes"] = c.notes;
    return j;
}

nlohmann::json to_json(StructureReport const& r)
{
    nlohmann::json conds = nlohmann::json::array();
    for (auto const& c : r.conditions)
        conds.push_back({{"name", c.name},
                         {"passed", c.passed},
                         {"n_checked", c.n_checked},
                         {"worst_excess", std::isfinite(c.worst_excess)
                                              ? nlohmann::json(c.worst_excess)
                                              : nlohmann::json(nullptr)},
                         {"worst_sample", c.worst_sample}});
    return {{"conditions", conds}, {"notes", r.notes}};
}

}  // namespace nbsde
