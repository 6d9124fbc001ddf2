#include "nbsde/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nbsde/errors.hpp"

namespace nbsde
{
namespace
{
std::string trim(std::string_view s)
{
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct Entry
{
    std::string value;
    int line;
};

using Section = std::map<std::string, Entry>;

std::set<std::string> const& allowed_keys(std::string const& section)
{
    static std::map<std::string, std::set<std::string>> const keys = {
        {"domain", {"kind", "dimension", "radius", "semi_axis_x", "semi_axis_y"}},
        {"coefficients", {"f", "g1", "g2", "g3", "h", "q", "b1", "b2", "b3"}},
        {"constants",
         {"alpha", "beta", "K", "M", "k", "beta_prime", "C0", "variant", "trace_norm"}},
        {"solver",
         {"backend", "mesh_h", "tol", "max_iter", "inner_tol", "paths", "step", "horizon", "seed",
          "output", "override_admissibility", "validation_budget", "validation_box",
          "probe_points", "probe_allowance", "probe_paths", "probe_step", "probe_horizon",
          "conditions_paths", "conditions_step", "conditions_horizon"}},
        {"reference", {"u", "h1_threshold"}},
    };
    static std::set<std::string> const none;
    auto it = keys.find(section);
    return it == keys.end() ? none : it->second;
}

class Reader
{
  public:
    Reader(std::map<std::string, Section> sections, std::string origin)
        : sections_(std::move(sections)), origin_(std::move(origin))
    {
    }

    [[noreturn]] void fail(int line, std::string const& msg) const
    {
        throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

    Entry const* get(std::string const& section, std::string const& key) const
    {
        auto s = sections_.find(section);
        if (s == sections_.end())
            return nullptr;
        auto e = s->second.find(key);
        return e == s->second.end() ? nullptr : &e->second;
    }

    template<class T>
    void number(std::string const& section, std::string const& key, T& out) const
    {
        Entry const* e = get(section, key);
        if (!e)
            return;
        auto const& v = e->value;
        T parsed{};
        auto const [end, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (ec != std::errc() || end != v.data() + v.size())
            fail(e->line, key + ": expected a number, got '" + v + "'");
        out = parsed;
    }

    void positive(std::string const& section, std::string const& key, double& out) const
    {
        number(section, key, out);
        if (Entry const* e = get(section, key); e && !(out > 0))
            fail(e->line, key + " must be positive");
    }

    void boolean(std::string const& section, std::string const& key, bool& out) const
    {
        Entry const* e = get(section, key);
        if (!e)
            return;
        if (e->value == "true" || e->value == "1")
            out = true;
        else if (e->value == "false" || e->value == "0")
            out = false;
        else
            fail(e->line, key + ": expected true or false");
    }

    std::string text(std::string const& section, std::string const& key,
                     std::string const& fallback) const
    {
        Entry const* e = get(section, key);
        return e ? e->value : fallback;
    }

    int line_of(std::string const& section, std::string const& key) const
    {
        Entry const* e = get(section, key);
        return e ? e->line : 0;
    }

  private:
    std::map<std::string, Section> sections_;
    std::string origin_;
};

}  // namespace

Domain RunConfig::domain() const
{
    if (domain_kind == "ellipse")
        return Domain::ellipse(semi_axis_x, semi_axis_y);
    if (domain_kind == "ball")
        return Domain::ball(dimension, radius);
    return Domain::disk(radius);
}

RunConfig parse_config(std::string const& text, std::string const& origin)
{
    std::map<std::string, Section> sections;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    int line_no = 0;
    auto fail = [&](int line, std::string const& msg) {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
    };
    while (std::getline(in, raw))
    {
        ++line_no;
        std::string const line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';')
            continue;
        if (line.front() == '[')
        {
            if (line.back() != ']')
                fail(line_no, "malformed section header");
            current = trim(std::string_view(line).substr(1, line.size() - 2));
            if (allowed_keys(current).empty())
                fail(line_no, "unknown section [" + current + "]");
            sections[current];
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string::npos)
            fail(line_no, "expected 'key = value'");
        if (current.empty())
            fail(line_no, "key outside of any section");
        std::string const key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!value.empty() && value.front() == '"')
        {
            if (value.size() < 2 || value.back() != '"')
                fail(line_no, "unterminated quoted value");
            value = value.substr(1, value.size() - 2);
        }
        if (!allowed_keys(current).count(key))
            fail(line_no, "unknown key '" + key + "' in [" + current + "]");
        if (sections[current].count(key))
            fail(line_no, "duplicate key '" + key + "' in [" + current + "]");
        sections[current][key] = {value, line_no};
    }

    Reader const r(std::move(sections), origin);
    RunConfig c;
    c.origin = origin;

    // [domain]
    c.domain_kind = r.text("domain", "kind", "disk");
    r.number("domain", "dimension", c.dimension);
    r.positive("domain", "radius", c.radius);
    r.positive("domain", "semi_axis_x", c.semi_axis_x);
    r.positive("domain", "semi_axis_y", c.semi_axis_y);
    if (c.domain_kind != "disk" && c.domain_kind != "ball" && c.domain_kind != "ellipse")
        r.fail(r.line_of("domain", "kind"), "kind must be disk, ball or ellipse");
    if (c.domain_kind != "ball" && c.dimension != 2)
        r.fail(r.line_of("domain", "dimension"), c.domain_kind + " is two-dimensional");
    if (c.dimension < 2 || c.dimension > 3)
        r.fail(r.line_of("domain", "dimension"), "dimension must be 2 or 3");

    // [coefficients]
    auto expr_text = [&](std::string const& key) {
        std::string const v = r.text("coefficients", key, "0");
        c.coefficient_text[key] = v;
        return v;
    };
    auto parse_checked = [&](std::string const& key, VariableSet const& vars) {
        try
        {
            return parse_expr(expr_text(key), vars);
        }
        catch (Error const& e)
        {
            r.fail(r.line_of("coefficients", key), key + ": " + e.what());
        }
    };
    int const dim = c.dimension;
    c.coeffs.dimension = dim;
    c.coeffs.f = parse_checked("f", vars_for_f(dim));
    c.coeffs.h = parse_checked("h", vars_for_h(dim));
    c.coeffs.q = parse_checked("q", vars_for_x(dim));
    for (int i = 1; i <= 3; ++i)
    {
        std::string const gk = "g" + std::to_string(i);
        std::string const bk = "b" + std::to_string(i);
        if (i > dim)
        {
            for (auto const& k : {gk, bk})
                if (r.get("coefficients", k))
                    r.fail(r.line_of("coefficients", k), k + " requires dimension " + std::to_string(i));
            continue;
        }
        c.coeffs.g.push_back(parse_checked(gk, vars_for_f(dim)));
        c.coeffs.b.push_back(parse_checked(bk, vars_for_x(dim)));
    }

    // [constants]
    auto& k = c.constants;
    r.number("constants", "alpha", k.alpha);
    r.number("constants", "beta", k.beta);
    r.number("constants", "K", k.K);
    r.number("constants", "M", k.M);
    r.number("constants", "k", k.k);
    r.number("constants", "beta_prime", k.beta_prime);
    r.number("constants", "C0", k.C0);
    if (r.get("constants", "trace_norm"))
    {
        double tn = 0;
        r.positive("constants", "trace_norm", tn);
        k.trace_norm = tn;
        k.trace_norm_source = "user-supplied";
    }
    std::string const variant = r.text("constants", "variant", "probabilistic");
    if (variant == "probabilistic")
        c.variant = ConstantsVariant::probabilistic;
    else if (variant == "analytic")
        c.variant = ConstantsVariant::analytic;
    else
        r.fail(r.line_of("constants", "variant"), "variant must be probabilistic or analytic");

    // [solver]
    auto& s = c.solver;
    std::string const backend = r.text("solver", "backend", "fem");
    if (backend == "fem")
        s.backend = Backend::fem;
    else if (backend == "stochastic-verify")
        s.backend = Backend::stochastic_verify;
    else if (backend == "both")
        s.backend = Backend::both;
    else
        r.fail(r.line_of("solver", "backend"), "backend must be fem, stochastic-verify or both");
    r.positive("solver", "mesh_h", s.mesh_h);
    r.positive("solver", "tol", s.tol);
    r.number("solver", "max_iter", s.max_iter);
    if (s.max_iter < 1)
        r.fail(r.line_of("solver", "max_iter"), "max_iter must be at least 1");
    r.positive("solver", "inner_tol", s.inner_tol);
    r.number("solver", "paths", s.paths);
    if (s.paths < 2)
        r.fail(r.line_of("solver", "paths"), "paths must be at least 2");
    r.positive("solver", "step", s.step);
    r.positive("solver", "horizon", s.horizon);
    r.number("solver", "seed", s.seed);
    s.output = r.text("solver", "output", s.output);
    r.boolean("solver", "override_admissibility", s.override_admissibility);
    r.number("solver", "validation_budget", s.validation_budget);
    if (s.validation_budget < 1)
        r.fail(r.line_of("solver", "validation_budget"), "validation_budget must be at least 1");
    r.positive("solver", "validation_box", s.validation_box);
    r.number("solver", "probe_points", s.probe_points);
    r.number("solver", "probe_allowance", s.probe_allowance);
    r.number("solver", "probe_paths", s.probe_paths);
    r.positive("solver", "probe_step", s.probe_step);
    r.positive("solver", "probe_horizon", s.probe_horizon);
    r.number("solver", "conditions_paths", s.conditions_paths);
    if (s.conditions_paths < 2)
        r.fail(r.line_of("solver", "conditions_paths"), "conditions_paths must be at least 2");
    r.positive("solver", "conditions_step", s.conditions_step);
    r.positive("solver", "conditions_horizon", s.conditions_horizon);
    if (s.probe_paths < 2)
        r.fail(r.line_of("solver", "probe_paths"), "probe_paths must be at least 2");
    if (s.probe_points < 0)
        r.fail(r.line_of("solver", "probe_points"), "probe_points must be nonnegative");

    // [reference]
    if (r.get("reference", "u"))
    {
        c.reference_text = r.text("reference", "u", "");
        try
        {
            c.reference = parse_expr(c.reference_text, vars_for_x(dim));
        }
        catch (Error const& e)
        {
            r.fail(r.line_of("reference", "u"), std::string("u: ") + e.what());
        }
    }
    r.number("reference", "h1_threshold", c.h1_threshold);
    return c;
}

RunConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

}  // namespace nbsde
