#include "nbsde/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nbsde/errors.hpp"
#include "nbsde/rng.hpp"

namespace nbsde
{
namespace
{
constexpr double pi = std::numbers::pi;

double boundary_tolerance(Domain const& domain)
{
    return 1e-12 * domain.diameter();
}

//---------------------------------------------------------------------------//
// Ellipse helpers. psi = q / w with q = 1 - x^2/a^2 - y^2/b^2 and
// w = 2 sqrt(x^2/a^4 + y^2/b^4 + c q^2), which equals |grad q| on the
// boundary, so grad psi = grad q / |grad q| there.

PsiValue ellipse_psi(double a, double b, Vec const& x)
{
    double const a2 = a * a, b2 = b * b;
    double const c = 1.0 / std::min(a2, b2);
    double const q = 1.0 - x[0] * x[0] / a2 - x[1] * x[1] / b2;
    Eigen::Vector2d const grad_q(-2.0 * x[0] / a2, -2.0 * x[1] / b2);
    double const s = x[0] * x[0] / (a2 * a2) + x[1] * x[1] / (b2 * b2) + c * q * q;
    Eigen::Vector2d const grad_s
        = Eigen::Vector2d(2.0 * x[0] / (a2 * a2), 2.0 * x[1] / (b2 * b2))
          + 2.0 * c * q * grad_q;
    double const root = std::sqrt(s);
    double const w = 2.0 * root;
    Eigen::Vector2d const grad_w = grad_s / root;
    Eigen::Vector2d const grad = grad_q / w - q * grad_w / (w * w);
    Vec g(2);
    g << grad[0], grad[1];
    return {q / w, g};
}

double robust_length(double v0, double v1)
{
    return std::hypot(v0, v1);
}

// Root of (r0 z0/(s + r0))^2 + (z1/(s + 1))^2 - 1 by bisection.
double ellipse_bisector(double r0, double z0, double z1, double g)
{
    double const n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0 ? 0.0 : robust_length(n0, z1) - 1.0;
    double s = 0;
    for (int i = 0; i < 1100; ++i)
    {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1)
            break;
        double const ratio0 = n0 / (s + r0);
        double const ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0)
            s0 = s;
        else if (g < 0)
            s1 = s;
        else
            break;
    }
    return s;
}

// Nearest point on x^2/e0^2 + y^2/e1^2 = 1 for e0 >= e1 and y in the first quadrant.
Eigen::Vector2d ellipse_foot_quadrant(double e0, double e1, double y0, double y1)
{
    if (y1 > 0)
    {
        if (y0 > 0)
        {
            double const z0 = y0 / e0;
            double const z1 = y1 / e1;
            double const g = z0 * z0 + z1 * z1 - 1.0;
            if (g != 0)
            {
                double const r0 = (e0 / e1) * (e0 / e1);
                double const sbar = ellipse_bisector(r0, z0, z1, g);
                return {r0 * y0 / (sbar + r0), y1 / (sbar + 1.0)};
            }
            return {y0, y1};
        }
        return {0.0, e1};
    }
    double const numer0 = e0 * y0;
    double const denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0)
    {
        double const xde0 = numer0 / denom0;
        return {e0 * xde0, e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0))};
    }
    return {e0, 0.0};
}

Projection ellipse_projection(Domain const& domain, Vec const& x)
{
    auto const [a, b] = domain.semi_axes();
    bool const swap = a < b;
    double const e0 = swap ? b : a;
    double const e1 = swap ? a : b;
    double const p0 = swap ? x[1] : x[0];
    double const p1 = swap ? x[0] : x[1];
    Eigen::Vector2d f = ellipse_foot_quadrant(e0, e1, std::abs(p0), std::abs(p1));
    f[0] = std::copysign(f[0], p0);
    // nonnegative second coordinate wins a tie on the major axis
    f[1] = p1 < 0 ? -f[1] : f[1];
    Vec foot(2);
    foot << (swap ? f[1] : f[0]), (swap ? f[0] : f[1]);
    Vec const normal = eval_psi(domain, foot).gradient.normalized();
    return {foot, normal, (x - foot).norm()};
}

double halton(std::uint64_t index, std::uint64_t base)
{
    double f = 1.0, r = 0.0;
    while (index > 0)
    {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

}  // namespace

//---------------------------------------------------------------------------//
Vec make_vec(std::initializer_list<double> values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v[i++] = x;
    return v;
}

Domain::Domain(DomainKind kind, int dim, double a, double b)
    : kind_(kind), dim_(dim), a_(a), b_(b), volume_(0), boundary_measure_(0)
{
    if (kind == DomainKind::ball)
    {
        if (dim != 2 && dim != 3)
            throw UnsupportedDomain("ball dimension must be 2 or 3, got "
                                    + std::to_string(dim));
        if (!(a > 0))
            throw UnsupportedDomain("ball radius must be positive");
        if (dim == 2)
        {
            volume_ = pi * a * a;
            boundary_measure_ = 2.0 * pi * a;
        }
        else
        {
            volume_ = 4.0 / 3.0 * pi * a * a * a;
            boundary_measure_ = 4.0 * pi * a * a;
        }
    }
    else
    {
        if (!(a > 0 && b > 0))
            throw UnsupportedDomain("ellipse semi-axes must be positive");
        double const major = std::max(a, b);
        double const minor = std::min(a, b);
        double const ecc = std::sqrt(1.0 - (minor * minor) / (major * major));
        volume_ = pi * a * b;
        boundary_measure_ = 4.0 * major * std::comp_ellint_2(ecc);
    }
}

Domain Domain::disk(double radius)
{
    return Domain(DomainKind::ball, 2, radius, radius);
}

Domain Domain::ball(int dimension, double radius)
{
    return Domain(DomainKind::ball, dimension, radius, radius);
}

Domain Domain::ellipse(double semi_axis_x, double semi_axis_y)
{
    return Domain(DomainKind::ellipse, 2, semi_axis_x, semi_axis_y);
}

double Domain::diameter() const
{
    return 2.0 * std::max(a_, b_);
}

double Domain::radius() const
{
    return std::max(a_, b_);
}

Vec Domain::box_upper() const
{
    Vec v(dim_);
    if (kind_ == DomainKind::ball)
        v.setConstant(a_);
    else
        v << a_, b_;
    return v;
}

Vec Domain::box_lower() const
{
    return -box_upper();
}

std::string Domain::describe() const
{
    std::ostringstream os;
    if (kind_ == DomainKind::ball)
        os << (dim_ == 2 ? "disk" : "ball-3") << "(radius=" << a_ << ")";
    else
        os << "ellipse(a=" << a_ << ", b=" << b_ << ")";
    return os.str();
}

//---------------------------------------------------------------------------//
PsiValue eval_psi(Domain const& domain, Vec const& x)
{
    if (domain.kind() == DomainKind::ball)
    {
        double const r = domain.radius();
        return {(r * r - x.squaredNorm()) / (2.0 * r), Vec(-x / r)};
    }
    return ellipse_psi(domain.semi_axes()[0], domain.semi_axes()[1], x);
}

Membership contains(Domain const& domain, Vec const& x)
{
    double const tol = boundary_tolerance(domain);
    double signed_distance;
    if (domain.kind() == DomainKind::ball)
        signed_distance = domain.radius() - x.norm();
    else
        signed_distance = eval_psi(domain, x).value;
    if (std::abs(signed_distance) <= tol)
        return Membership::boundary;
    return signed_distance > 0 ? Membership::interior : Membership::exterior;
}

Projection project_to_boundary(Domain const& domain, Vec const& x)
{
    if (!x.allFinite())
        throw DegenerateProjection("projection of a non-finite point");
    if (domain.kind() == DomainKind::ellipse)
        return ellipse_projection(domain, x);

    double const r = domain.radius();
    double const norm = x.norm();
    Vec direction(domain.dimension());
    if (norm > 0)
    {
        direction = x / norm;
    }
    else
    {
        direction.setZero();
        direction[0] = 1.0;
    }
    Vec foot = r * direction;
    return {foot, Vec(-direction), std::abs(norm - r)};
}

Penalization penalization(Domain const& domain, Vec const& x)
{
    Vec zero = Vec::Zero(domain.dimension());
    if (contains(domain, x) != Membership::exterior)
        return {0.0, zero};
    Projection const p = project_to_boundary(domain, x);
    return {p.distance * p.distance, Vec(2.0 * (x - p.foot))};
}

std::vector<BoundaryNode> boundary_quadrature(Domain const& domain, int m)
{
    if (m < 3)
        throw BadOrder("boundary quadrature needs m >= 3, got " + std::to_string(m));
    std::vector<BoundaryNode> rule;
    if (domain.dimension() == 2)
    {
        auto const [a, b] = domain.semi_axes();
        double const dtheta = 2.0 * pi / m;
        for (int i = 0; i < m; ++i)
        {
            double const theta = i * dtheta;
            double const c = std::cos(theta), s = std::sin(theta);
            double const speed = std::hypot(a * s, b * c);
            rule.push_back({make_vec({a * c, b * s}), speed * dtheta});
        }
        return rule;
    }

    // Sphere: Gauss-Legendre in cos(polar) times equispaced azimuth.
    int const n_polar = (m + 1) / 2;
    std::vector<double> nodes(n_polar), weights(n_polar);
    for (int i = 0; i < n_polar; ++i)
    {
        double t = std::cos(pi * (i + 0.75) / (n_polar + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n_polar; ++k)
            {
                double const p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double const pn = n_polar == 1 ? t : p1;
            double const pnm1 = n_polar == 1 ? 1.0 : p0;
            dp = n_polar * (t * pn - pnm1) / (t * t - 1.0);
            double const dt = pn / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16)
                break;
        }
        nodes[i] = t;
        weights[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    double const r = domain.radius();
    double const dphi = 2.0 * pi / m;
    for (int i = 0; i < n_polar; ++i)
    {
        double const ct = nodes[i];
        double const st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < m; ++j)
        {
            double const phi = j * dphi;
            rule.push_back({make_vec({r * st * std::cos(phi), r * st * std::sin(phi), r * ct}),
                            r * r * weights[i] * dphi});
        }
    }
    return rule;
}

Vec sample_uniform(Domain const& domain, CounterRng& rng)
{
    Vec const lo = domain.box_lower();
    Vec const hi = domain.box_upper();
    Vec x(domain.dimension());
    while (true)
    {
        for (int i = 0; i < domain.dimension(); ++i)
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
        if (contains(domain, x) == Membership::interior)
            return x;
    }
}

std::vector<Vec> interior_grid(Domain const& domain, int count, double shrink)
{
    static constexpr std::uint64_t bases[] = {2, 3, 5};
    Vec const lo = domain.box_lower();
    Vec const hi = domain.box_upper();
    std::vector<Vec> points;
    Vec x(domain.dimension());
    for (std::uint64_t index = 1; static_cast<int>(points.size()) < count; ++index)
    {
        for (int i = 0; i < domain.dimension(); ++i)
            x[i] = lo[i] + (hi[i] - lo[i]) * halton(index, bases[i]);
        if (contains(domain, Vec(x / shrink)) == Membership::interior)
            points.push_back(x);
    }
    return points;
}

}  // namespace nbsde
