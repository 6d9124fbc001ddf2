#include "nbsde/fem.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "nbsde/errors.hpp"

namespace nbsde
{
namespace
{
using Triplets = std::vector<Eigen::Triplet<double>>;

Vec to_vec(Point2 const& p)
{
    Vec v(2);
    v << p.x(), p.y();
    return v;
}

Point2 to_point(Vec const& v)
{
    return {v[0], v[1]};
}

SparseMatrix from_triplets(Eigen::Index n, Triplets const& trip)
{
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

constexpr std::array<double, 3> gauss_t = {0.5 - 0.5 * 0.7745966692414834, 0.5,
                                           0.5 + 0.5 * 0.7745966692414834};
constexpr std::array<double, 3> gauss_w = {5.0 / 18, 8.0 / 18, 5.0 / 18};

}  // namespace

TriangleRule const& triangle_rule()
{
    static TriangleRule const rule = [] {
        TriangleRule r;
        double const a1 = 0.445948490915965, w1 = 0.223381589678011;
        double const a2 = 0.091576213509771, w2 = 0.109951743655322;
        r.bary = {{{1 - 2 * a1, a1, a1},
                   {a1, 1 - 2 * a1, a1},
                   {a1, a1, 1 - 2 * a1},
                   {1 - 2 * a2, a2, a2},
                   {a2, 1 - 2 * a2, a2},
                   {a2, a2, 1 - 2 * a2}}};
        r.weight = {w1, w1, w1, w2, w2, w2};
        return r;
    }();
    return rule;
}

//---------------------------------------------------------------------------//
std::shared_ptr<FemSpace const> FemSpace::create(Mesh mesh)
{
    return std::shared_ptr<FemSpace const>(new FemSpace(std::move(mesh)));
}

FemSpace::FemSpace(Mesh mesh) : mesh_(std::move(mesh))
{
    auto const& rule = triangle_rule();
    std::size_t const nt = mesh_.n_triangles();
    Eigen::Index const n = size();
    area_.resize(nt);
    grads_.resize(nt);
    quad_points_.resize(nt * TriangleRule::size);

    Triplets k_trip, m_trip, b_trip;
    k_trip.reserve(nt * 9);
    m_trip.reserve(nt * 9);
    for (std::size_t t = 0; t < nt; ++t)
    {
        auto const& tri = mesh_.triangles[t];
        Point2 const& p0 = mesh_.nodes[tri[0]];
        Point2 const& p1 = mesh_.nodes[tri[1]];
        Point2 const& p2 = mesh_.nodes[tri[2]];
        double const twice = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
        if (!(twice > 0))
            throw SingularSystem("degenerate or inverted triangle " + std::to_string(t));
        area_[t] = 0.5 * twice;
        auto& g = grads_[t];
        g.col(0) = Point2(p1.y() - p2.y(), p2.x() - p1.x()) / twice;
        g.col(1) = Point2(p2.y() - p0.y(), p0.x() - p2.x()) / twice;
        g.col(2) = Point2(p0.y() - p1.y(), p1.x() - p0.x()) / twice;
        for (int q = 0; q < TriangleRule::size; ++q)
        {
            auto const& l = rule.bary[q];
            quad_points_[t * TriangleRule::size + q] = l[0] * p0 + l[1] * p1 + l[2] * p2;
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
            {
                k_trip.emplace_back(tri[i], tri[j], area_[t] * g.col(i).dot(g.col(j)));
                m_trip.emplace_back(tri[i], tri[j], area_[t] / 12 * (i == j ? 2 : 1));
            }
    }
    for (std::size_t e = 0; e < mesh_.boundary_edges.size(); ++e)
    {
        auto const& edge = mesh_.boundary_edges[e];
        Point2 const& a = mesh_.nodes[edge[0]];
        Point2 const& b = mesh_.nodes[edge[1]];
        double const len = (b - a).norm();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                b_trip.emplace_back(edge[i], edge[j], len / 6 * (i == j ? 2 : 1));
        for (int g = 0; g < 3; ++g)
            edge_points_.push_back({(1 - gauss_t[g]) * a + gauss_t[g] * b, gauss_w[g] * len,
                                    static_cast<int>(e), 1 - gauss_t[g]});
    }
    stiffness_ = from_triplets(n, k_trip);
    mass_ = from_triplets(n, m_trip);
    boundary_mass_ = from_triplets(n, b_trip);
    gram_.compute(stiffness_ + mass_);
    if (gram_.info() != Eigen::Success)
        throw SingularSystem("H1 Gram matrix factorization failed");

    // Bucket grid for point location
    Point2 lo = mesh_.nodes.front(), hi = lo;
    for (auto const& p : mesh_.nodes)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    double const margin = 0.5 * mesh_.h_max + 1e-12;
    lo.array() -= margin;
    hi.array() += margin;
    cell_ = std::max(mesh_.h_max, 1e-12);
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_)));
    grid_lo_ = lo;
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    auto cell_of = [&](double v, double origin, int count) {
        return std::clamp(static_cast<int>(std::floor((v - origin) / cell_)), 0, count - 1);
    };
    for (std::size_t t = 0; t < nt; ++t)
    {
        auto const& tri = mesh_.triangles[t];
        Point2 blo = mesh_.nodes[tri[0]], bhi = blo;
        for (int i = 1; i < 3; ++i)
        {
            blo = blo.cwiseMin(mesh_.nodes[tri[i]]);
            bhi = bhi.cwiseMax(mesh_.nodes[tri[i]]);
        }
        blo.array() -= margin;
        bhi.array() += margin;
        for (int ix = cell_of(blo.x(), lo.x(), nx_); ix <= cell_of(bhi.x(), lo.x(), nx_); ++ix)
            for (int iy = cell_of(blo.y(), lo.y(), ny_); iy <= cell_of(bhi.y(), lo.y(), ny_); ++iy)
                buckets_[static_cast<std::size_t>(iy) * nx_ + ix].push_back(static_cast<int>(t));
    }
}

std::array<double, 3> FemSpace::barycentric(std::size_t t, Point2 const& x) const
{
    auto const& tri = mesh_.triangles[t];
    auto const& g = grads_[t];
    Point2 const d = x - mesh_.nodes[tri[0]];
    double const l1 = g.col(1).dot(d);
    double const l2 = g.col(2).dot(d);
    return {1 - l1 - l2, l1, l2};
}

FemSpace::Location FemSpace::locate(Point2 const& x) const
{
    int const ix = std::clamp(static_cast<int>(std::floor((x.x() - grid_lo_.x()) / cell_)), 0, nx_ - 1);
    int const iy = std::clamp(static_cast<int>(std::floor((x.y() - grid_lo_.y()) / cell_)), 0, ny_ - 1);
    auto const& bucket = buckets_[static_cast<std::size_t>(iy) * nx_ + ix];

    Location best{-1, {0, 0, 0}};
    double best_min = -std::numeric_limits<double>::infinity();
    auto consider = [&](int t) {
        auto const l = barycentric(static_cast<std::size_t>(t), x);
        double const m = std::min({l[0], l[1], l[2]});
        if (m > best_min)
        {
            best_min = m;
            best = {t, l};
        }
        return m >= 0;
    };
    for (int t : bucket)
        if (consider(t))
            return best;
    if (best.triangle < 0 || best_min < -0.5)
    {
        for (std::size_t t = 0; t < mesh_.n_triangles(); ++t)
            if (consider(static_cast<int>(t)))
                return best;
    }
    return best;
}

double FemSpace::dual_norm(Eigen::VectorXd const& r) const
{
    return std::sqrt(std::max(0.0, r.dot(gram_.solve(r))));
}

Eigen::VectorXd FemSpace::solve_gram(Eigen::VectorXd const& r) const
{
    return gram_.solve(r);
}

//---------------------------------------------------------------------------//
std::pair<double, Point2> FemFunction::sample(Point2 const& x) const
{
    auto const loc = space->locate(x);
    auto const& tri = space->mesh().triangles[static_cast<std::size_t>(loc.triangle)];
    double v = 0;
    for (int i = 0; i < 3; ++i)
        v += loc.bary[i] * values[tri[i]];
    return {v, gradient_on(static_cast<std::size_t>(loc.triangle))};
}

double FemFunction::value_at(Point2 const& x) const
{
    return sample(x).first;
}

Point2 FemFunction::gradient_at(Point2 const& x) const
{
    return sample(x).second;
}

Point2 FemFunction::gradient_on(std::size_t t) const
{
    auto const& tri = space->mesh().triangles[t];
    auto const& g = space->basis_gradients(t);
    return g.col(0) * values[tri[0]] + g.col(1) * values[tri[1]] + g.col(2) * values[tri[2]];
}

double FemFunction::value_at_quad(std::size_t t, int q) const
{
    auto const& tri = space->mesh().triangles[t];
    auto const& l = triangle_rule().bary[q];
    return l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]];
}

FemFunction interpolate(SpacePtr const& space, ScalarFn const& fn)
{
    FemFunction out{space, Eigen::VectorXd(space->size())};
    for (Eigen::Index i = 0; i < space->size(); ++i)
        out.values[i] = fn(space->mesh().nodes[static_cast<std::size_t>(i)]);
    return out;
}

FemFunction zero_function(SpacePtr const& space)
{
    return {space, Eigen::VectorXd::Zero(space->size())};
}

QuadField sample_quad_field(FemSpace const& space, VectorFn const& fn)
{
    QuadField out(space.mesh().n_triangles() * TriangleRule::size);
    for (std::size_t t = 0; t < space.mesh().n_triangles(); ++t)
        for (int q = 0; q < TriangleRule::size; ++q)
            out[t * TriangleRule::size + q] = fn(space.quad_point(t, q));
    return out;
}

QuadField frozen_divergence_field(CoefficientSet const& coeffs, FemFunction const& u)
{
    auto const& space = *u.space;
    QuadField out(space.mesh().n_triangles() * TriangleRule::size);
    for (std::size_t t = 0; t < space.mesh().n_triangles(); ++t)
    {
        Vec const z = to_vec(u.gradient_on(t));
        for (int q = 0; q < TriangleRule::size; ++q)
            out[t * TriangleRule::size + q]
                = to_point(coeffs.eval_g(to_vec(space.quad_point(t, q)), u.value_at_quad(t, q), z));
    }
    return out;
}

namespace
{
//! ∫g·∇φi for a quadrature-sampled field.
Eigen::VectorXd divergence_load(FemSpace const& space, QuadField const& g)
{
    auto const& rule = triangle_rule();
    Eigen::VectorXd load = Eigen::VectorXd::Zero(space.size());
    if (g.empty())
        return load;
    if (g.size() != space.mesh().n_triangles() * TriangleRule::size)
        throw MeshMismatch("frozen field was sampled on a different mesh");
    for (std::size_t t = 0; t < space.mesh().n_triangles(); ++t)
    {
        Point2 gbar = Point2::Zero();
        for (int q = 0; q < TriangleRule::size; ++q)
            gbar += rule.weight[q] * g[t * TriangleRule::size + q];
        gbar *= space.area(t);
        auto const& tri = space.mesh().triangles[t];
        auto const& grads = space.basis_gradients(t);
        for (int i = 0; i < 3; ++i)
            load[tri[i]] += gbar.dot(grads.col(i));
    }
    return load;
}

//---------------------------------------------------------------------------//
class SemilinearForm
{
  public:
    SemilinearForm(SpacePtr space, CoefficientSet const& coeffs, QuadField const& g_frozen)
        : space_(std::move(space)), coeffs_(coeffs)
    {
        auto const& rule = triangle_rule();
        auto const& mesh = space_->mesh();
        std::size_t const nt = mesh.n_triangles();
        drift_ = !coeffs.drift_is_zero();
        x_quad_.resize(nt * TriangleRule::size);
        for (std::size_t i = 0; i < x_quad_.size(); ++i)
            x_quad_[i] = to_vec(space_->quad_point(i / TriangleRule::size,
                                                   static_cast<int>(i % TriangleRule::size)));
        for (auto const& ep : space_->edge_points())
            x_edge_.push_back(to_vec(ep.x));

        Triplets trip;
        trip.reserve(nt * 9);
        for (std::size_t t = 0; t < nt; ++t)
        {
            auto const& tri = mesh.triangles[t];
            auto const& grads = space_->basis_gradients(t);
            for (int q = 0; q < TriangleRule::size; ++q)
            {
                Vec const& x = x_quad_[t * TriangleRule::size + q];
                double const w = rule.weight[q] * space_->area(t);
                double const qv = coeffs.eval_q(x);
                Point2 const bv = drift_ ? to_point(coeffs.eval_b(x)) : Point2::Zero();
                auto const& l = rule.bary[q];
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                    {
                        double v = -w * qv * l[i] * l[j];
                        if (drift_)
                            v -= w * bv.dot(grads.col(j)) * l[i];
                        trip.emplace_back(tri[i], tri[j], v);
                    }
            }
        }
        linear_ = 0.5 * space_->stiffness() + from_triplets(space_->size(), trip);
        frozen_load_ = divergence_load(*space_, g_frozen);
    }

    bool symmetric() const { return !drift_; }

    //! A u − F(u).
    Eigen::VectorXd residual(Eigen::VectorXd const& u) const
    {
        Eigen::VectorXd r = linear_ * u - frozen_load_;
        auto const& rule = triangle_rule();
        auto const& mesh = space_->mesh();
        FemFunction const fn{space_, u};
        for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
        {
            auto const& tri = mesh.triangles[t];
            Vec const z = to_vec(fn.gradient_on(t));
            for (int q = 0; q < TriangleRule::size; ++q)
            {
                double const w = rule.weight[q] * space_->area(t);
                double const fv
                    = coeffs_.eval_f(x_quad_[t * TriangleRule::size + q], fn.value_at_quad(t, q), z);
                for (int i = 0; i < 3; ++i)
                    r[tri[i]] -= w * fv * rule.bary[q][i];
            }
        }
        auto const& eps = space_->edge_points();
        for (std::size_t k = 0; k < eps.size(); ++k)
        {
            auto const& edge = mesh.boundary_edges[static_cast<std::size_t>(eps[k].edge)];
            double const l0 = eps[k].lambda0;
            double const y = l0 * u[edge[0]] + (1 - l0) * u[edge[1]];
            double const hv = 0.5 * eps[k].weight * coeffs_.eval_h(x_edge_[k], y);
            r[edge[0]] -= hv * l0;
            r[edge[1]] -= hv * (1 - l0);
        }
        return r;
    }

    //! A + S_f + ½S_h with the monotone slopes at u.
    SparseMatrix jacobian(Eigen::VectorXd const& u) const
    {
        auto const& rule = triangle_rule();
        auto const& mesh = space_->mesh();
        FemFunction const fn{space_, u};
        Triplets trip;
        bool any = false;
        for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
        {
            auto const& tri = mesh.triangles[t];
            Vec const z = to_vec(fn.gradient_on(t));
            for (int q = 0; q < TriangleRule::size; ++q)
            {
                Vec const& x = x_quad_[t * TriangleRule::size + q];
                double const y = fn.value_at_quad(t, q);
                double const d = 1e-6 * (1 + std::abs(y));
                double const slope
                    = -(coeffs_.eval_f(x, y + d, z) - coeffs_.eval_f(x, y - d, z)) / (2 * d);
                if (!(slope > 0))
                    continue;
                any = true;
                double const w = rule.weight[q] * space_->area(t) * slope;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        trip.emplace_back(tri[i], tri[j], w * rule.bary[q][i] * rule.bary[q][j]);
            }
        }
        auto const& eps = space_->edge_points();
        for (std::size_t k = 0; k < eps.size(); ++k)
        {
            auto const& edge = mesh.boundary_edges[static_cast<std::size_t>(eps[k].edge)];
            double const l[2] = {eps[k].lambda0, 1 - eps[k].lambda0};
            double const y = l[0] * u[edge[0]] + l[1] * u[edge[1]];
            double const d = 1e-6 * (1 + std::abs(y));
            double const slope
                = -(coeffs_.eval_h(x_edge_[k], y + d) - coeffs_.eval_h(x_edge_[k], y - d)) / (2 * d);
            if (!(slope > 0))
                continue;
            any = true;
            double const w = 0.5 * eps[k].weight * slope;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    trip.emplace_back(edge[i], edge[j], w * l[i] * l[j]);
        }
        if (!any)
            return linear_;
        return linear_ + from_triplets(space_->size(), trip);
    }

  private:
    SpacePtr space_;
    CoefficientSet const& coeffs_;
    bool drift_ = false;
    std::vector<Vec> x_quad_;
    std::vector<Vec> x_edge_;
    SparseMatrix linear_;
    Eigen::VectorXd frozen_load_;
};

Eigen::VectorXd solve_linear(SparseMatrix const& a, Eigen::VectorXd const& rhs, bool symmetric)
{
    Eigen::VectorXd x;
    if (symmetric)
    {
        Eigen::SimplicialLDLT<SparseMatrix> solver(a);
        if (solver.info() != Eigen::Success)
            throw SingularSystem("LDLT factorization failed");
        x = solver.solve(rhs);
    }
    else
    {
        Eigen::SparseLU<SparseMatrix> solver;
        solver.analyzePattern(a);
        solver.factorize(a);
        if (solver.info() != Eigen::Success)
            throw SingularSystem("LU factorization failed");
        x = solver.solve(rhs);
    }
    if (!x.allFinite())
        throw SingularSystem("linear solve produced non-finite values");
    return x;
}

}  // namespace

FemFunction solve_g_lifting(SpacePtr const& space, QuadField const& g)
{
    Eigen::VectorXd const load = divergence_load(*space, g);
    FemFunction out{space, space->solve_gram(load)};
    if (!out.values.allFinite())
        throw SingularSystem("G-lifting solve produced non-finite values");
    return out;
}

FemFunction solve_semilinear_g_frozen(SpacePtr const& space,
                                      CoefficientSet const& coeffs,
                                      QuadField const& g_frozen,
                                      InnerSolveOptions const& options,
                                      InnerSolveInfo* info,
                                      FemFunction const* initial)
{
    SemilinearForm const form(space, coeffs, g_frozen);
    Eigen::VectorXd u = initial ? initial->values : Eigen::VectorXd::Zero(space->size());
    if (initial && initial->space != space)
        throw MeshMismatch("initial guess lives on a different mesh");

    Eigen::VectorXd r = form.residual(u);
    double res = space->dual_norm(r);
    int it = 0;
    for (; res > options.tol; ++it)
    {
        if (it >= options.max_iterations)
            throw InnerDivergence("inner iteration did not converge in "
                                  + std::to_string(options.max_iterations)
                                  + " steps; last residual " + std::to_string(res));
        Eigen::VectorXd const step = solve_linear(form.jacobian(u), -r, form.symmetric());
        double omega = 1;
        Eigen::VectorXd trial = u + step;
        Eigen::VectorXd trial_r = form.residual(trial);
        double trial_res = space->dual_norm(trial_r);
        for (int k = 0; k < 20 && !(trial_res < res); ++k)
        {
            omega *= options.damping;
            trial = u + omega * step;
            trial_r = form.residual(trial);
            trial_res = space->dual_norm(trial_r);
        }
        if (!(trial_res < res))
            throw InnerDivergence("inner iteration stalled at residual " + std::to_string(res));
        u = std::move(trial);
        r = std::move(trial_r);
        res = trial_res;
    }
    if (info)
        *info = {it, res};
    return {space, u};
}

Eigen::VectorXd weak_residual(CoefficientSet const& coeffs,
                              FemFunction const& u,
                              QuadField const& g_frozen)
{
    return SemilinearForm(u.space, coeffs, g_frozen).residual(u.values);
}

double nonlinear_weak_residual(CoefficientSet const& coeffs, FemFunction const& u)
{
    return u.space->dual_norm(weak_residual(coeffs, u, frozen_divergence_field(coeffs, u)));
}

//---------------------------------------------------------------------------//
double l2_norm(FemFunction const& fn)
{
    return std::sqrt(std::max(0.0, fn.values.dot(fn.space->mass() * fn.values)));
}

double h1_norm(FemFunction const& fn)
{
    Eigen::VectorXd const kv = fn.space->stiffness() * fn.values + fn.space->mass() * fn.values;
    return std::sqrt(std::max(0.0, fn.values.dot(kv)));
}

double h1_distance(FemFunction const& a, FemFunction const& b)
{
    if (a.space != b.space)
        throw MeshMismatch("fields live on different meshes");
    return h1_norm({a.space, a.values - b.values});
}

double h1_error(FemFunction const& fn, ScalarFn const& value, VectorFn const& gradient)
{
    auto const& rule = triangle_rule();
    auto const& space = *fn.space;
    double sum = 0;
    for (std::size_t t = 0; t < space.mesh().n_triangles(); ++t)
    {
        Point2 const g = fn.gradient_on(t);
        for (int q = 0; q < TriangleRule::size; ++q)
        {
            Point2 const& x = space.quad_point(t, q);
            double const e = fn.value_at_quad(t, q) - value(x);
            sum += rule.weight[q] * space.area(t) * (e * e + (g - gradient(x)).squaredNorm());
        }
    }
    return std::sqrt(sum);
}

double l2_error(FemFunction const& fn, ScalarFn const& value)
{
    auto const& rule = triangle_rule();
    auto const& space = *fn.space;
    double sum = 0;
    for (std::size_t t = 0; t < space.mesh().n_triangles(); ++t)
        for (int q = 0; q < TriangleRule::size; ++q)
        {
            double const e = fn.value_at_quad(t, q) - value(space.quad_point(t, q));
            sum += rule.weight[q] * space.area(t) * e * e;
        }
    return std::sqrt(sum);
}

double integral(FemFunction const& fn)
{
    double sum = 0;
    auto const& mesh = fn.space->mesh();
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
    {
        auto const& tri = mesh.triangles[t];
        sum += fn.space->area(t) * (fn.values[tri[0]] + fn.values[tri[1]] + fn.values[tri[2]]) / 3;
    }
    return sum;
}

double estimate_trace_constant(FemSpace const& space, int iterations)
{
    Eigen::VectorXd x = Eigen::VectorXd::Ones(space.size());
    SparseMatrix const gram = space.stiffness() + space.mass();
    double rayleigh = 0;
    for (int i = 0; i < iterations; ++i)
    {
        x = space.solve_gram(space.boundary_mass() * x);
        x /= std::sqrt(x.dot(gram * x));
        double const next = x.dot(space.boundary_mass() * x);
        if (i > 0 && std::abs(next - rayleigh) <= 1e-12 * next)
        {
            rayleigh = next;
            break;
        }
        rayleigh = next;
    }
    return rayleigh;
}

}  // namespace nbsde
