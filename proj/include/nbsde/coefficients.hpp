#pragma once

#include <string>
#include <vector>

#include "nbsde/expr.hpp"
#include "nbsde/geometry.hpp"

namespace nbsde
{
//---------------------------------------------------------------------------//
/*!
 * Problem data f(x,y,z), g(x,y,z), h(x,y), q(x), b(x).
 *
 * The sign conventions are those of the strong problem
 *   ½Δu + <b,∇u> + qu − div g(·,u,∇u) + f(·,u,∇u) = 0  in D,
 *   <∇u − 2g(·,u,∇u), n> + h(·,u) = 0                  on ∂D,
 * with n the unit inward normal.
 */
struct CoefficientSet
{
    int dimension = 2;
    Expr f;
    std::vector<Expr> g;
    Expr h;
    Expr q;
    std::vector<Expr> b;

    //! Parse all components; empty g/b entries default to the zero literal.
    static CoefficientSet parse(int dimension,
                                std::string const& f,
                                std::vector<std::string> const& g,
                                std::string const& h,
                                std::string const& q,
                                std::vector<std::string> const& b = {});

    double eval_f(Vec const& x, double y, Vec const& z) const;
    Vec eval_g(Vec const& x, double y, Vec const& z) const;
    double eval_h(Vec const& x, double y) const;
    double eval_q(Vec const& x) const;
    Vec eval_b(Vec const& x) const;

    bool drift_is_zero() const;
    //! True when some component of g references y or z.
    bool g_depends_on_solution() const;
    //! Throws UnsupportedDomain unless b ≡ 0 (stochastic backend requirement).
    void require_zero_drift() const;
};

//! Variable sets used when parsing each coefficient.
VariableSet vars_for_f(int dimension);
VariableSet vars_for_h(int dimension);
VariableSet vars_for_x(int dimension);

}  // namespace nbsde
