#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nbsde/coefficients.hpp"
#include "nbsde/constants.hpp"
#include "nbsde/fem.hpp"

namespace corpus
{
//! Manufactured problem with exact solution u* = x1² + x2² on the unit disk.
struct Problem
{
    std::string name;
    nbsde::CoefficientSet coeffs;
    nbsde::StructureConstants consts;
};

inline nbsde::StructureConstants corpus_constants(double k)
{
    nbsde::StructureConstants c;
    c.alpha = 2;
    c.beta = 1;
    c.K = 1;
    c.M = 4;
    c.k = k;
    c.beta_prime = 1;
    return c;
}

inline std::vector<Problem> manufactured()
{
    using nbsde::CoefficientSet;
    return {
        {"k=0",
         CoefficientSet::parse(2, "-2*(y-(x1^2+x2^2)) + x1^2+x2^2-1", {"0.5*x1", "0.5*x2"},
                               "2 - y", "-1"),
         corpus_constants(0)},
        {"k=0.1",
         CoefficientSet::parse(2,
                               "-2*(y-(x1^2+x2^2)) + x1^2+x2^2-2 + 0.2*x1*(1-tanh(x1^2+x2^2)^2)"
                               " + 0.5*sin(z1-2*x1)",
                               {"0.1*tanh(y)", "0"}, "3 - y - 0.2*tanh(1)*x1", "-1"),
         corpus_constants(0.1)},
    };
}

inline double exact(nbsde::Point2 const& x)
{
    return x.squaredNorm();
}

inline nbsde::Point2 exact_gradient(nbsde::Point2 const& x)
{
    return 2 * x;
}

//---------------------------------------------------------------------------//
//! Modified Bessel function I_n(x) by its power series.
inline double bessel_i(int n, double x)
{
    double term = std::pow(x / 2, n) / std::tgamma(n + 1);
    double sum = term;
    for (int m = 1; m < 200 && term > 1e-18 * sum; ++m)
    {
        term *= (x * x / 4) / (m * static_cast<double>(m + n));
        sum += term;
    }
    return sum;
}

/*!
 * ½Δu − u = 0 in the unit disk with ∂u/∂r = 1 on the boundary:
 * u = A·I₀(√2 r) with A·√2·I₁(√2) = 1.
 */
inline double pure_boundary_solution(double r)
{
    double const s = std::sqrt(2.0);
    return bessel_i(0, s * r) / (s * bessel_i(1, s));
}

/*!
 * G-lifting of g = x on the unit disk: −ΔG + G = −2 with ∂G/∂r = 1,
 * so G = −2 + I₀(r)/I₁(1).
 */
inline double lifting_of_identity(double r)
{
    return -2 + bessel_i(0, r) / bessel_i(1, 1);
}

inline double lifting_of_identity_derivative(double r)
{
    return bessel_i(1, r) / bessel_i(1, 1);
}

}  // namespace corpus
