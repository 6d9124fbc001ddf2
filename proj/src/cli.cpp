#include "nbsde/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbsde/errors.hpp"
#include "nbsde/fem.hpp"
#include "nbsde/mesh.hpp"
#include "nbsde/parallel.hpp"
#include "nbsde/picard.hpp"
#include "nbsde/probeval.hpp"
#include "nbsde/reflect.hpp"

namespace nbsde
{
namespace
{
namespace fs = std::filesystem;
using nlohmann::json;

void write_json(json const& j, fs::path const& path)
{
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

fs::path output_dir(RunConfig const& config)
{
    fs::path dir = config.solver.output;
    fs::create_directories(dir);
    return dir;
}

std::string fmt(double v, int precision = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

Vec to_vec(Point2 const& p)
{
    Vec v(2);
    v << p.x(), p.y();
    return v;
}

Point2 to_point(Vec const& x)
{
    return {x[0], x[1]};
}

//! sup|q| and sup|b| over interior and boundary samples, for the analytic recipe.
AnalyticInputs analytic_inputs(Domain const& domain, CoefficientSet const& coeffs)
{
    std::vector<Vec> pts = interior_grid(domain, 256, 1.0);
    for (auto const& node : boundary_quadrature(domain, 64))
        pts.push_back(node.node);
    AnalyticInputs in;
    for (auto const& x : pts)
    {
        in.q_sup = std::max(in.q_sup, coeffs.eval_q(x));
        in.drift_sup = std::max(in.drift_sup, coeffs.eval_b(x).norm());
    }
    return in;
}

//! Constants after the recipe; with the override, the raw constants are kept.
StructureConstants resolve_constants(RunConfig const& config, SpacePtr const& space,
                                     std::string* message)
{
    StructureConstants c = config.constants;
    if (config.variant == ConstantsVariant::analytic && !c.trace_norm && space)
    {
        c.trace_norm = estimate_trace_constant(*space);
        c.trace_norm_source = "estimated on the solver mesh";
    }
    try
    {
        return choose_constants(c, config.variant, analytic_inputs(config.domain(), config.coeffs));
    }
    catch (InadmissibleConstants const& e)
    {
        if (!config.solver.override_admissibility)
            throw;
        if (message)
            *message = e.what();
        return c;
    }
}

double reference_error(RunConfig const& config, FemFunction const& u)
{
    Expr const& ref = *config.reference;
    auto value = [&](Point2 const& p) {
        double const x[2] = {p.x(), p.y()};
        return ref.eval({std::span<double const>(x, 2), {}, {}});
    };
    auto gradient = [&](Point2 const& p) {
        double constexpr d = 1e-6;
        Point2 g;
        for (int i = 0; i < 2; ++i)
        {
            Point2 e = Point2::Zero();
            e[i] = d;
            g[i] = (value(p + e) - value(p - e)) / (2 * d);
        }
        return g;
    };
    return h1_error(u, value, gradient);
}

void print_structure(StructureReport const& report, std::ostream& out)
{
    out << "structure condition   pass  samples  worst_excess  worst_sample\n";
    for (auto const& c : report.conditions)
    {
        out << std::left << std::setw(22) << c.name << std::setw(6) << (c.passed ? "yes" : "NO")
            << std::setw(9) << c.n_checked << std::setw(14) << fmt(c.worst_excess)
            << (c.passed ? "" : c.worst_sample) << '\n';
    }
    for (auto const& n : report.notes)
        out << "note: " << n << '\n';
}

ValidationOptions validation_options(RunConfig const& config)
{
    ValidationOptions v;
    v.budget = config.solver.validation_budget;
    v.box = config.solver.validation_box;
    v.seed = config.solver.seed;
    return v;
}

//---------------------------------------------------------------------------//
struct ProbeRow
{
    Vec x;
    double fem = 0;
    Estimate mc;
    double tail = 0;
    bool passed = false;
};

/*!
 * Probe comparison through the lifted field v = u − 2G, which solves
 * ½Δv + qv + f(·,u,∇u) + (1 + 2q)G = 0, <∇v, n> + h(·,u) = 0.
 */
std::vector<ProbeRow> probe_comparison(RunConfig const& config, Domain const& domain,
                                       FemFunction const& u)
{
    auto const& coeffs = config.coeffs;
    auto const& s = config.solver;
    std::vector<ProbeRow> rows;
    if (s.probe_points == 0)
        return rows;
    FemFunction const G = solve_g_lifting(u.space, frozen_divergence_field(coeffs, u));
    PathScalar const q = [&](Vec const& x) { return coeffs.eval_q(x); };
    PathScalar const F = [&](Vec const& x) {
        Point2 const p = to_point(x);
        auto const [uv, du] = u.sample(p);
        return coeffs.eval_f(x, uv, to_vec(du)) + (1 + 2 * coeffs.eval_q(x)) * G.value_at(p);
    };
    PathScalar const H = [&](Vec const& x) { return coeffs.eval_h(x, u.value_at(to_point(x))); };

    std::vector<Vec> points = interior_grid(domain, s.probe_points, 0.8);
    McParams p;
    p.n_paths = s.probe_paths;
    p.h = s.probe_step;
    p.T = s.probe_horizon;
    p.seed = derive_seed(s.seed, 7);
    auto const results = fk_linear_frozen_points(domain, points, q, F, H, p);
    for (std::size_t k = 0; k < points.size(); ++k)
    {
        ProbeRow row;
        row.x = points[k];
        Point2 const pt = to_point(points[k]);
        row.fem = u.value_at(pt) - 2 * G.value_at(pt);
        row.mc = results[k].estimate;
        row.tail = results[k].truncation_tail_bound;
        row.passed = std::abs(row.mc.mean() - row.fem)
                     <= 3 * row.mc.standard_error() + s.probe_allowance + row.tail;
        rows.push_back(row);
    }
    return rows;
}

std::string point_text(Vec const& x)
{
    std::string s = "(";
    for (int i = 0; i < x.size(); ++i)
        s += (i ? ", " : "") + fmt(x[i], 4);
    return s + ")";
}

}  // namespace

//---------------------------------------------------------------------------//
void apply_overrides(RunConfig& config, CliOverrides const& o)
{
    if (o.out)
        config.solver.output = o.out->string();
    if (o.seed)
        config.solver.seed = *o.seed;
    if (o.override_admissibility)
        config.solver.override_admissibility = true;
}

int cmd_solve(RunConfig const& config, std::ostream& out)
{
    Domain const domain = config.domain();
    auto const& s = config.solver;
    fs::path const dir = output_dir(config);

    std::string admissibility;
    SpacePtr space;
    if (config.variant == ConstantsVariant::analytic && !config.constants.trace_norm)
        space = FemSpace::create(build_mesh(domain, s.mesh_h));
    StructureConstants const consts = resolve_constants(config, space, &admissibility);
    if (!admissibility.empty())
        out << "warning: inadmissible constants overridden: " << admissibility << '\n';

    StructureReport const structure
        = validate_structure(domain, config.coeffs, consts, validation_options(config));
    if (!structure.all_passed())
        out << "warning: structural conditions failed on sampled points\n";

    PicardOptions opt;
    opt.h_mesh = s.mesh_h;
    opt.tol = s.tol;
    opt.max_iter = s.max_iter;
    opt.override_admissibility = s.override_admissibility;
    opt.variant = config.variant;
    opt.analytic = analytic_inputs(domain, config.coeffs);
    opt.inner.tol = s.inner_tol;

    StructureConstants raw = config.constants;
    raw.trace_norm = consts.trace_norm;
    raw.trace_norm_source = consts.trace_norm_source;
    PicardTrace trace;
    try
    {
        trace = run_picard(domain, config.coeffs, raw, opt);
    }
    catch (NoContraction const& e)
    {
        write_trace_csv(e.trace(), dir / "trace.csv");
        out << "error: " << e.what() << '\n';
        return exit_no_contraction;
    }

    Mesh const& mesh = trace.solution().space->mesh();
    write_field_csv(mesh, trace.solution().values, dir / "solution.csv");
    write_mesh(mesh, dir / "mesh.txt");
    write_trace_csv(trace, dir / "trace.csv");

    json summary;
    summary["domain"] = domain.describe();
    summary["mesh"] = {{"h_target", s.mesh_h},
                       {"h_max", mesh.h_max},
                       {"nodes", mesh.n_nodes()},
                       {"triangles", mesh.n_triangles()}};
    summary["constants"] = to_json(trace.constants);
    summary["gamma"] = std::isfinite(trace.gamma) ? json(trace.gamma) : json(nullptr);
    summary["structure"] = to_json(structure);
    summary["converged"] = trace.converged;
    summary["iterations"] = trace.n_iterations;
    summary["increments"] = trace.increments;
    summary["ratios"] = trace.ratios;
    summary["final_residual"] = trace.final_residual;
    summary["guarantee_void"] = trace.guarantee_void;
    if (!trace.admissibility_message.empty())
        summary["admissibility_message"] = trace.admissibility_message;
    if (trace.increments.size() >= 2)
        summary["contraction"] = to_json(contraction_report(trace));

    bool ok = trace.converged;
    if (config.reference)
    {
        double const err = reference_error(config, trace.solution());
        summary["reference"] = {{"u", config.reference_text},
                                {"h1_error", err},
                                {"h1_threshold", config.h1_threshold}};
        if (config.h1_threshold > 0 && !(err <= config.h1_threshold))
        {
            out << "H1 error " << fmt(err) << " exceeds threshold " << fmt(config.h1_threshold)
                << '\n';
            ok = false;
        }
        out << "H1 error vs reference: " << fmt(err) << '\n';
    }
    out << "picard: " << (trace.converged ? "converged" : "not converged") << " after "
        << trace.n_iterations << " iterations, final increment "
        << fmt(trace.increments.empty() ? 0.0 : trace.increments.back()) << ", residual "
        << fmt(trace.final_residual) << '\n';

    if (s.backend != Backend::fem)
    {
        int const code = cmd_verify(config, dir / "solution.csv", out);
        summary["verify_exit_code"] = code;
        ok = ok && code == exit_ok;
    }
    write_json(summary, dir / "summary.json");
    return ok ? exit_ok : exit_check_failed;
}

//---------------------------------------------------------------------------//
int cmd_verify(RunConfig const& config, fs::path const& field, std::ostream& out)
{
    Domain const domain = config.domain();
    auto const& s = config.solver;
    config.coeffs.require_zero_drift();
    auto const space = FemSpace::create(build_mesh(domain, s.mesh_h));
    FemFunction const u{space, read_field_csv(space->mesh(), field)};
    StructureConstants const consts = resolve_constants(config, space, nullptr);

    McParams p;
    p.n_paths = s.paths;
    p.h = s.step;
    p.T = s.horizon;
    p.seed = s.seed;
    ResidualReport const residual = martingale_residual_test(domain, u, config.coeffs, consts, p);
    std::vector<ProbeRow> const probes = probe_comparison(config, domain, u);

    out << "martingale residual (" << s.paths << " paths, T = " << fmt(s.horizon)
        << ", h = " << fmt(s.step) << ")\n";
    out << "  test        value       se          target      se          pass\n";
    auto row = [&](char const* name, double v, double se, double t, double tse, bool pass) {
        out << "  " << std::left << std::setw(12) << name << std::setw(12) << fmt(v)
            << std::setw(12) << fmt(se) << std::setw(12) << fmt(t) << std::setw(12) << fmt(tse)
            << (pass ? "yes" : "NO") << '\n';
    };
    row("mean", residual.residual.mean(), residual.residual.standard_error(), 0, 0,
        residual.pass_mean);
    row("variance", residual.residual_variance.variance, residual.residual_variance.standard_error,
        residual.predicted_variance.mean(), residual.predicted_variance.standard_error(),
        residual.pass_variance);
    row("terminal", residual.terminal_full, 0, residual.terminal_half, 0, residual.pass_terminal);

    bool ok = residual.passed();
    json probes_json = json::array();
    if (!probes.empty())
    {
        out << "probe comparison (" << s.probe_paths << " paths, T = " << fmt(s.probe_horizon)
            << ", h = " << fmt(s.probe_step) << ")\n";
        out << "  point                 fem         mc          se          pass\n";
    }
    for (auto const& r : probes)
    {
        out << "  " << std::left << std::setw(22) << point_text(r.x) << std::setw(12) << fmt(r.fem)
            << std::setw(12) << fmt(r.mc.mean()) << std::setw(12) << fmt(r.mc.standard_error())
            << (r.passed ? "yes" : "NO") << '\n';
        ok = ok && r.passed;
        probes_json.push_back({{"x", std::vector<double>(r.x.data(), r.x.data() + r.x.size())},
                               {"fem", r.fem},
                               {"mc", to_json(r.mc)},
                               {"truncation_tail_bound", r.tail},
                               {"passed", r.passed}});
    }
    out << "verify: " << (ok ? "pass" : "FAIL") << '\n';
    write_json({{"residual", to_json(residual)}, {"probes", probes_json}, {"passed", ok}},
               output_dir(config) / "verify.json");
    return ok ? exit_ok : exit_check_failed;
}

//---------------------------------------------------------------------------//
int cmd_check_conditions(RunConfig const& config, std::ostream& out)
{
    Domain const domain = config.domain();
    auto const& s = config.solver;
    config.coeffs.require_zero_drift();
    PathScalar const q = [&](Vec const& x) { return config.coeffs.eval_q(x); };
    McParams p;
    p.n_paths = s.conditions_paths;
    p.h = s.conditions_step;
    p.T = s.conditions_horizon;
    p.seed = s.seed;
    Vec const center = Vec::Zero(domain.dimension());
    ConditionsCReport const c = check_conditions_C(domain, q, p, center, center);

    out << "condition  estimate    se          at T/2      increment   divergent\n";
    auto row = [&](char const* name, ConditionEstimate const& e) {
        out << std::left << std::setw(11) << name << std::setw(12) << fmt(e.value.mean())
            << std::setw(12) << fmt(e.value.standard_error()) << std::setw(12)
            << fmt(e.half.mean()) << std::setw(12) << fmt(e.increment.mean())
            << (e.divergent ? "YES" : "no") << '\n';
    };
    row("C.1", c.c1);
    row("C.2", c.c2);
    row("C.3", c.c3);
    out << "C.3 maximizer " << point_text(c.c3_argmax) << " over " << c.grid_size
        << " points, T = " << fmt(c.T) << '\n';

    StructureReport const structure
        = validate_structure(domain, config.coeffs, config.constants, validation_options(config));
    print_structure(structure, out);

    write_json({{"conditions_C", to_json(c)}, {"structure", to_json(structure)}},
               output_dir(config) / "conditions.json");
    bool const ok = !c.c1.divergent && !c.c2.divergent && !c.c3.divergent
                    && structure.all_passed();
    return ok ? exit_ok : exit_check_failed;
}

//---------------------------------------------------------------------------//
int cmd_simulate(RunConfig const& config, std::size_t count, std::ostream& out)
{
    Domain const domain = config.domain();
    auto const& s = config.solver;
    fs::path const dir = output_dir(config);
    std::vector<PathGrid> paths(count);
    parallel_for(count, [&](std::size_t i) {
        paths[i] = simulate_path_uniform(domain, s.horizon, s.step, path_seed(s.seed, 0, i));
    });
    std::ofstream csv(dir / "paths.csv");
    csv << "path,step,t";
    for (int d = 1; d <= domain.dimension(); ++d)
        csv << ",x" << d;
    csv << ",L\n";
    csv << std::setprecision(17);
    for (std::size_t i = 0; i < count; ++i)
    {
        auto const& path = paths[i];
        char name[32];
        std::snprintf(name, sizeof name, "path_%04zu.bin", i);
        write_path_dump(path, dir / name);
        double L = 0;
        for (std::size_t j = 0; j < path.states.size(); ++j)
        {
            csv << i << ',' << j << ',' << path.time(j);
            for (int d = 0; d < domain.dimension(); ++d)
                csv << ',' << path.states[j][d];
            csv << ',' << L << '\n';
            if (j < path.n_steps())
                L += path.dL[j];
        }
    }
    out << "wrote " << count << " paths to " << dir.string() << '\n';
    return exit_ok;
}

//---------------------------------------------------------------------------//
int cmd_bench(RunConfig const& config, std::ostream& out)
{
    Domain const domain = config.domain();
    auto const& s = config.solver;
    int const dim = domain.dimension();
    check_step(domain, s.step);
    auto const [n, h] = time_grid(s.horizon, s.step);
    double const T = static_cast<double>(n) * h;

    std::vector<double> rate(s.paths), star(s.paths);
    PathField const identity = [](Vec const& x) { return x; };
    parallel_for(s.paths, [&](std::size_t i) {
        PathGrid const path = simulate_path_uniform(domain, T, h, path_seed(s.seed, 1, i));
        rate[i] = path.local_time(path.n_steps()) / T;
        star[i] = star_integral(path, identity);
    });
    Estimate const lt = Estimate::from_samples(rate);
    Estimate const st = Estimate::from_samples(star);
    double const lt_target = domain.boundary_measure() / domain.volume();
    double const st_target = -dim * T;

    out << "suite              estimate    se          target\n";
    out << std::left << std::setw(19) << "local-time rate" << std::setw(12) << fmt(lt.mean())
        << std::setw(12) << fmt(lt.standard_error()) << fmt(lt_target) << '\n';
    out << std::left << std::setw(19) << "star(g = x)" << std::setw(12) << fmt(st.mean())
        << std::setw(12) << fmt(st.standard_error()) << fmt(st_target) << '\n';
    write_json({{"paths", s.paths},
                {"T", T},
                {"h", h},
                {"local_time_rate", to_json(lt)},
                {"local_time_rate_target", lt_target},
                {"star_identity", to_json(st)},
                {"star_identity_target", st_target}},
               output_dir(config) / "bench.json");
    return exit_ok;
}

//---------------------------------------------------------------------------//
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Semilinear Neumann solver with stochastic verification", "nbsde"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool override_adm = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Configuration file")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides config)");
        sub->add_option("--seed", seed, "Master seed (overrides config)");
        sub->add_flag("--override-admissibility", override_adm,
                      "Continue with inadmissible constants; guarantees are void");
    };
    auto* solve = app.add_subcommand("solve", "Picard/FEM solve");
    auto* verify = app.add_subcommand("verify", "Stochastic verification of a solution field");
    auto* check = app.add_subcommand("check-conditions", "Conditions (C) and structure checks");
    auto* simulate = app.add_subcommand("simulate", "Dump reflected paths");
    auto* bench = app.add_subcommand("bench", "Local-time and star-integral suites");
    for (auto* sub : {solve, verify, check, simulate, bench})
        add_common(sub);
    std::string field;
    verify->add_option("--field", field, "Solution CSV (default <out>/solution.csv)");
    std::size_t count = 10;
    simulate->add_option("--count", count, "Number of paths")->check(CLI::Range(1, 100000));

    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try
    {
        RunConfig config = load_config(config_path);
        CliOverrides o;
        if (!out_dir.empty())
            o.out = out_dir;
        for (auto* sub : {solve, verify, check, simulate, bench})
            if (sub->parsed() && sub->count("--seed"))
                o.seed = seed;
        o.override_admissibility = override_adm;
        apply_overrides(config, o);

        if (solve->parsed())
            return cmd_solve(config, out);
        if (verify->parsed())
            return cmd_verify(config,
                              field.empty() ? fs::path(config.solver.output) / "solution.csv"
                                            : fs::path(field),
                              out);
        if (check->parsed())
            return cmd_check_conditions(config, out);
        if (simulate->parsed())
            return cmd_simulate(config, count, out);
        return cmd_bench(config, out);
    }
    catch (ConfigError const& e)
    {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (SyntaxError const& e)
    {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (UnknownIdentifier const& e)
    {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (ArityMismatch const& e)
    {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (FieldLoadError const& e)
    {
        err << "field error: " << e.what() << '\n';
        return exit_config;
    }
    catch (NoContraction const& e)
    {
        err << "no contraction: " << e.what() << '\n';
        return exit_no_contraction;
    }
    catch (InadmissibleConstants const& e)
    {
        err << "inadmissible constants: " << e.what() << '\n';
        return exit_inadmissible;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

}  // namespace nbsde
