#include "nbsde/coefficients.hpp"

#include "nbsde/errors.hpp"

namespace nbsde
{
namespace
{
std::span<double const> as_span(Vec const& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::vector<Expr> parse_components(int dimension,
                                   std::vector<std::string> const& src,
                                   VariableSet const& vars,
                                   char const* label)
{
    if (static_cast<int>(src.size()) > dimension)
        throw ArityMismatch(std::string(label) + " has " + std::to_string(src.size())
                            + " components but the domain dimension is "
                            + std::to_string(dimension));
    std::vector<Expr> out(static_cast<std::size_t>(dimension));
    for (std::size_t i = 0; i < src.size(); ++i)
        if (!src[i].empty())
            out[i] = parse_expr(src[i], vars);
    return out;
}

}  // namespace

VariableSet vars_for_f(int dimension)
{
    return {dimension, true, true};
}

VariableSet vars_for_h(int dimension)
{
    return {dimension, true, false};
}

VariableSet vars_for_x(int dimension)
{
    return {dimension, false, false};
}

CoefficientSet CoefficientSet::parse(int dimension,
                                     std::string const& f,
                                     std::vector<std::string> const& g,
                                     std::string const& h,
                                     std::string const& q,
                                     std::vector<std::string> const& b)
{
    CoefficientSet c;
    c.dimension = dimension;
    c.f = f.empty() ? Expr() : parse_expr(f, vars_for_f(dimension));
    c.g = parse_components(dimension, g, vars_for_f(dimension), "g");
    c.h = h.empty() ? Expr() : parse_expr(h, vars_for_h(dimension));
    c.q = q.empty() ? Expr() : parse_expr(q, vars_for_x(dimension));
    c.b = parse_components(dimension, b, vars_for_x(dimension), "b");
    return c;
}

double CoefficientSet::eval_f(Vec const& x, double y, Vec const& z) const
{
    return f.eval({as_span(x), y, as_span(z)});
}

Vec CoefficientSet::eval_g(Vec const& x, double y, Vec const& z) const
{
    Vec out(dimension);
    ExprEnv const env{as_span(x), y, as_span(z)};
    for (int i = 0; i < dimension; ++i)
        out[i] = g[static_cast<std::size_t>(i)].eval(env);
    return out;
}

double CoefficientSet::eval_h(Vec const& x, double y) const
{
    return h.eval({as_span(x), y, {}});
}

double CoefficientSet::eval_q(Vec const& x) const
{
    return q.eval({as_span(x), std::nullopt, {}});
}

Vec CoefficientSet::eval_b(Vec const& x) const
{
    Vec out(dimension);
    ExprEnv const env{as_span(x), std::nullopt, {}};
    for (int i = 0; i < dimension; ++i)
        out[i] = b[static_cast<std::size_t>(i)].eval(env);
    return out;
}

bool CoefficientSet::drift_is_zero() const
{
    for (auto const& e : b)
        if (!e.is_zero_literal())
            return false;
    return true;
}

bool CoefficientSet::g_depends_on_solution() const
{
    for (auto const& e : g)
        if (e.uses_y() || e.uses_z())
            return true;
    return false;
}

void CoefficientSet::require_zero_drift() const
{
    if (!drift_is_zero())
        throw UnsupportedDomain("the stochastic backend requires b = 0");
}

}  // namespace nbsde
