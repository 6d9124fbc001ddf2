#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "nbsde/coefficients.hpp"
#include "nbsde/mesh.hpp"

namespace nbsde
{
using SparseMatrix = Eigen::SparseMatrix<double>;

//! Six-point degree-4 rule on triangles (barycentric coordinates, weights sum to 1).
struct TriangleRule
{
    static constexpr int size = 6;
    std::array<std::array<double, 3>, size> bary;
    std::array<double, size> weight;
};
TriangleRule const& triangle_rule();

//---------------------------------------------------------------------------//
/*!
 * P1 space on a mesh: element geometry, global matrices, quadrature points
 * and a point locator.
 */
class FemSpace
{
  public:
    static std::shared_ptr<FemSpace const> create(Mesh mesh);

    Mesh const& mesh() const { return mesh_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(mesh_.n_nodes()); }

    //! ∫∇φi·∇φj
    SparseMatrix const& stiffness() const { return stiffness_; }
    //! ∫φiφj
    SparseMatrix const& mass() const { return mass_; }
    //! ∫_{∂D}φiφj over the boundary polygon
    SparseMatrix const& boundary_mass() const { return boundary_mass_; }

    double area(std::size_t t) const { return area_[t]; }
    //! Gradients of the three local basis functions (columns).
    Eigen::Matrix<double, 2, 3> const& basis_gradients(std::size_t t) const { return grads_[t]; }
    //! Volume quadrature point q of triangle t.
    Point2 const& quad_point(std::size_t t, int q) const { return quad_points_[t * TriangleRule::size + q]; }

    //! Boundary quadrature: three Gauss points per edge.
    struct EdgePoint
    {
        Point2 x;
        double weight;   //!< includes edge length
        int edge;
        double lambda0;  //!< weight of the first edge node
    };
    std::vector<EdgePoint> const& edge_points() const { return edge_points_; }

    //! sqrt(rᵀ(K+M)⁻¹r): the H¹ dual norm of a residual vector.
    double dual_norm(Eigen::VectorXd const& r) const;
    Eigen::VectorXd solve_gram(Eigen::VectorXd const& r) const;

    struct Location
    {
        int triangle;
        std::array<double, 3> bary;
    };
    //! Containing triangle; points just outside the polygon get the nearest
    //! triangle with (slightly negative) barycentric coordinates.
    Location locate(Point2 const& x) const;

  private:
    explicit FemSpace(Mesh mesh);
    std::array<double, 3> barycentric(std::size_t t, Point2 const& x) const;

    Mesh mesh_;
    std::vector<double> area_;
    std::vector<Eigen::Matrix<double, 2, 3>> grads_;
    std::vector<Point2> quad_points_;
    std::vector<EdgePoint> edge_points_;
    SparseMatrix stiffness_;
    SparseMatrix mass_;
    SparseMatrix boundary_mass_;
    Eigen::SimplicialLDLT<SparseMatrix> gram_;

    Point2 grid_lo_;
    double cell_ = 1;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

using SpacePtr = std::shared_ptr<FemSpace const>;

//---------------------------------------------------------------------------//
//! Nodal P1 field.
struct FemFunction
{
    SpacePtr space;
    Eigen::VectorXd values;

    double value_at(Point2 const& x) const;
    Point2 gradient_at(Point2 const& x) const;
    //! Value and gradient with a single point location.
    std::pair<double, Point2> sample(Point2 const& x) const;
    Point2 gradient_on(std::size_t t) const;
    double value_at_quad(std::size_t t, int q) const;
};

using ScalarFn = std::function<double(Point2 const&)>;
using VectorFn = std::function<Point2(Point2 const&)>;

FemFunction interpolate(SpacePtr const& space, ScalarFn const& fn);
FemFunction zero_function(SpacePtr const& space);

//! Vector field sampled at every volume quadrature point (index t*6 + q).
using QuadField = std::vector<Point2>;
QuadField sample_quad_field(FemSpace const& space, VectorFn const& fn);
//! g(x, u, ∇u) at the quadrature points for a P1 field u.
QuadField frozen_divergence_field(CoefficientSet const& coeffs, FemFunction const& u);

/*!
 * Discrete Riesz representation of the divergence functional: the P1
 * field G with ∫∇G·∇ψ + Gψ = ∫g·∇ψ for all P1 ψ.
 */
FemFunction solve_g_lifting(SpacePtr const& space, QuadField const& g);

struct InnerSolveInfo
{
    int iterations = 0;
    double residual = 0;  //!< final H¹ dual norm
};

struct InnerSolveOptions
{
    double tol = 1e-10;
    int max_iterations = 200;
    double damping = 0.5;
};

/*!
 * One Picard step with g frozen: find u with
 *   ½∫∇u·∇ψ − ∫(b·∇u)ψ − ∫quψ − ∫f(·,u,∇u)ψ − ∫g·∇ψ − ½∫_{∂D}h(·,u)ψ = 0
 * for every P1 test function ψ.
 *
 * The dependence of f and h on u is handled by a fixed point preconditioned
 * with the monotone slopes max(0, −∂f/∂y), max(0, −∂h/∂y); a step that
 * does not reduce the residual is retried with damping.
 */
FemFunction solve_semilinear_g_frozen(SpacePtr const& space,
                                      CoefficientSet const& coeffs,
                                      QuadField const& g_frozen,
                                      InnerSolveOptions const& options = {},
                                      InnerSolveInfo* info = nullptr,
                                      FemFunction const* initial = nullptr);

//! Residual vector of the weak form above for a given u and frozen g.
Eigen::VectorXd weak_residual(CoefficientSet const& coeffs,
                              FemFunction const& u,
                              QuadField const& g_frozen);
//! H¹ dual norm of the fully nonlinear weak residual (g evaluated at u).
double nonlinear_weak_residual(CoefficientSet const& coeffs, FemFunction const& u);

double l2_norm(FemFunction const& fn);
double h1_norm(FemFunction const& fn);
double h1_distance(FemFunction const& a, FemFunction const& b);
double h1_error(FemFunction const& fn, ScalarFn const& value, VectorFn const& gradient);
double l2_error(FemFunction const& fn, ScalarFn const& value);
//! ∫ fn over the mesh.
double integral(FemFunction const& fn);

/*!
 * Smallest C with ∫_{∂D}w² ≤ C‖w‖²_{H¹} over the P1 space, by power
 * iteration on (K+M)⁻¹B_∂.
 */
double estimate_trace_constant(FemSpace const& space, int iterations = 200);

}  // namespace nbsde
