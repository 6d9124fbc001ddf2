#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nbsde
{
class CounterRng;

//! Ambient position/vector; at most three components, stored inline.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

enum class DomainKind
{
    ball,     //!< centered ball of radius r in dimension 2 (disk) or 3
    ellipse,  //!< centered axis-aligned ellipse in dimension 2
};

//---------------------------------------------------------------------------//
/*!
 * Smooth bounded domain D = {psi > 0} with boundary {psi = 0}.
 *
 * Volume and boundary measure are analytic. For the ellipse the perimeter
 * uses the complete elliptic integral of the second kind.
 */
class Domain
{
  public:
    static Domain disk(double radius = 1.0);
    static Domain ball(int dimension, double radius = 1.0);
    static Domain ellipse(double semi_axis_x, double semi_axis_y);

    DomainKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    double volume() const { return volume_; }
    double boundary_measure() const { return boundary_measure_; }
    double diameter() const;
    //! Radius of a ball; the larger semi-axis of an ellipse.
    double radius() const;
    std::array<double, 2> semi_axes() const { return {a_, b_}; }

    //! Lower/upper corner of the bounding box.
    Vec box_lower() const;
    Vec box_upper() const;

    std::string describe() const;

  private:
    Domain(DomainKind kind, int dim, double a, double b);

    DomainKind kind_;
    int dim_;
    double a_;
    double b_;
    double volume_;
    double boundary_measure_;
};

struct PsiValue
{
    double value;
    Vec gradient;
};

enum class Membership
{
    interior,
    boundary,
    exterior,
};

struct Projection
{
    Vec foot;
    Vec inward_normal;
    double distance;
};

//! Exterior penalization: d = dist(x, closure D)^2 and delta = grad d.
struct Penalization
{
    double d;
    Vec delta;
};

struct BoundaryNode
{
    Vec node;
    double weight;
};

//! Level-set function and gradient; grad psi is the unit inward normal on the boundary.
PsiValue eval_psi(Domain const& domain, Vec const& x);

//! Classification with tolerance 1e-12 relative to the diameter.
Membership contains(Domain const& domain, Vec const& x);

/*!
 * Nearest boundary point.
 *
 * Ties are broken deterministically: the ball center projects along the
 * first coordinate axis; ellipse points with two nearest feet take the one
 * with nonnegative second coordinate.
 */
Projection project_to_boundary(Domain const& domain, Vec const& x);

Penalization penalization(Domain const& domain, Vec const& x);

/*!
 * Boundary rule with positive weights summing to the boundary measure.
 *
 * In 2-D: m equispaced parameter angles (exact for trigonometric polynomials
 * of degree < m on the circle). On the sphere: m azimuthal nodes times
 * ceil(m/2) Gauss-Legendre polar nodes.
 */
std::vector<BoundaryNode> boundary_quadrature(Domain const& domain, int m);

//! Uniform point in D by rejection from the bounding box.
Vec sample_uniform(Domain const& domain, CounterRng& rng);

//! Deterministic well-spread interior points (Halton sequence, shrunk by `shrink`).
std::vector<Vec> interior_grid(Domain const& domain, int count, double shrink = 0.9);

Vec make_vec(std::initializer_list<double> values);

}  // namespace nbsde
