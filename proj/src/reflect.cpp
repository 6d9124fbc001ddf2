#include "nbsde/reflect.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "nbsde/errors.hpp"

namespace nbsde
{
namespace
{
constexpr char kMagic[8] = {'N', 'B', 'P', 'A', 'T', 'H', '1', '\0'};

void check_range(PathGrid const& path, std::size_t s, std::size_t t)
{
    if (s >= t)
        throw IndexOrder("need s < t, got s = " + std::to_string(s) + ", t = " + std::to_string(t));
    if (t > path.n_steps())
        throw IndexOrder("t = " + std::to_string(t) + " exceeds the path length "
                         + std::to_string(path.n_steps()));
}

}  // namespace

double PathGrid::local_time(std::size_t j) const
{
    double sum = 0;
    for (std::size_t i = 0; i < j; ++i)
        sum += dL[i];
    return sum;
}

//---------------------------------------------------------------------------//
ReflectingWalker::ReflectingWalker(Domain const& domain, Vec x0, double h, CounterRng rng,
                                   ReflectionScheme scheme)
    : domain_(domain), x_(std::move(x0)), h_(h), sqrt_h_(std::sqrt(h)), rng_(rng), scheme_(scheme)
{
    int const dim = domain.dimension();
    if (x_.size() != dim)
        throw UnsupportedDomain("start point has dimension " + std::to_string(x_.size())
                                + ", domain has " + std::to_string(dim));
    step_.dB = Vec::Zero(dim);
    step_.normal = Vec::Zero(dim);
}

auto ReflectingWalker::advance() -> Step const&
{
    int const dim = static_cast<int>(x_.size());
    for (int i = 0; i < dim; ++i)
        step_.dB[i] = sqrt_h_ * rng_.normal();
    step_.dL = 0;
    step_.normal.setZero();

    if (scheme_ == ReflectionScheme::projection)
    {
        x_ += step_.dB;
        if (contains(domain_, x_) == Membership::exterior)
        {
            Projection const p = project_to_boundary(domain_, x_);
            step_.dL = p.distance / kPushPerLocalTime;
            step_.normal = p.inward_normal;
            x_ = p.foot;
        }
    }
    else
    {
        Vec const x_prev = x_;
        x_ += step_.dB;
        if (contains(domain_, x_prev) == Membership::exterior)
        {
            Penalization const pen = penalization(domain_, x_prev);
            Vec const push = -pen.delta * (h_ / sqrt_h_);
            x_ += push;
            step_.dL = push.norm() / kPushPerLocalTime;
            step_.normal = project_to_boundary(domain_, x_prev).inward_normal;
        }
    }
    return step_;
}

std::pair<std::size_t, double> time_grid(double T, double h)
{
    if (!(T >= 0) || !(h > 0))
        throw StepTooLarge("need T >= 0 and h > 0");
    if (T == 0)
        return {0, h};
    if (h > T * (1 + 1e-12))
        throw StepTooLarge("step " + std::to_string(h) + " exceeds the horizon " + std::to_string(T));
    auto const n = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
    return {n, T / static_cast<double>(n)};
}

void check_step(Domain const& domain, double h)
{
    double const limit = std::pow(domain.diameter() / 10, 2);
    if (h > limit)
        throw StepTooLarge("step " + std::to_string(h) + " exceeds (diameter/10)^2 = "
                           + std::to_string(limit));
}

ReflectingWalker make_walker(Domain const& domain, Vec const& x0, double h, std::uint64_t seed,
                             ReflectionScheme scheme)
{
    return ReflectingWalker(domain, x0, h, CounterRng(seed).split(1), scheme);
}

Vec uniform_start(Domain const& domain, std::uint64_t seed)
{
    CounterRng rng = CounterRng(seed).split(0);
    return sample_uniform(domain, rng);
}

PathGrid simulate_path(Domain const& domain, Vec const& x0, double T, double h,
                       std::uint64_t seed, ReflectionScheme scheme)
{
    check_step(domain, h);
    auto const [n, step] = time_grid(T, h);
    PathGrid path;
    path.dimension = domain.dimension();
    path.h = step;
    path.seed = seed;
    path.states.reserve(n + 1);
    path.dB.reserve(n);
    path.dL.reserve(n);
    path.normals.reserve(n);
    path.states.push_back(x0);
    ReflectingWalker walker = make_walker(domain, x0, step, seed, scheme);
    for (std::size_t j = 0; j < n; ++j)
    {
        auto const& s = walker.advance();
        path.dB.push_back(s.dB);
        path.dL.push_back(s.dL);
        path.normals.push_back(s.normal);
        path.states.push_back(walker.state());
    }
    return path;
}

PathGrid simulate_path_uniform(Domain const& domain, double T, double h, std::uint64_t seed,
                               ReflectionScheme scheme)
{
    return simulate_path(domain, uniform_start(domain, seed), T, h, seed, scheme);
}

//---------------------------------------------------------------------------//
double forward_ito(PathGrid const& path, PathField const& field, std::size_t s, std::size_t t)
{
    check_range(path, s, t);
    double sum = 0;
    for (std::size_t j = s; j < t; ++j)
        sum += field(path.states[j]).dot(path.dB[j]);
    return sum;
}

double forward_ito(PathGrid const& path, PathField const& field)
{
    return path.n_steps() ? forward_ito(path, field, 0, path.n_steps()) : 0.0;
}

double backward_ito(PathGrid const& path, PathField const& field, std::size_t s, std::size_t t)
{
    check_range(path, s, t);
    double sum = 0;
    for (std::size_t j = s; j < t; ++j)
        sum += field(path.states[j + 1]).dot(-path.dB[j] - path.normals[j] * path.dL[j]);
    return sum;
}

double backward_ito(PathGrid const& path, PathField const& field)
{
    return path.n_steps() ? backward_ito(path, field, 0, path.n_steps()) : 0.0;
}

double star_integral(PathGrid const& path, PathField const& field, std::size_t s, std::size_t t)
{
    check_range(path, s, t);
    // Per-step sums so the terms of a constant field cancel exactly.
    double sum = 0;
    for (std::size_t j = s; j < t; ++j)
    {
        Vec const g0 = field(path.states[j]);
        Vec const g1 = field(path.states[j + 1]);
        double const fwd = g0.dot(path.dB[j]);
        double const bwd = g1.dot(-path.dB[j] - path.normals[j] * path.dL[j]);
        double const bnd = g1.dot(path.normals[j]) * path.dL[j];
        sum += (fwd + bwd) + bnd;
    }
    return sum;
}

double star_integral(PathGrid const& path, PathField const& field)
{
    return path.n_steps() ? star_integral(path, field, 0, path.n_steps()) : 0.0;
}

std::vector<double> weight_factors(PathGrid const& path, PathScalar const& q, double lambda,
                                   double mu, double q_scale)
{
    std::size_t const n = path.n_steps();
    std::vector<double> w(n + 1);
    double qint = 0, L = 0;
    for (std::size_t j = 0; j <= n; ++j)
    {
        w[j] = std::exp(lambda * path.time(j) + mu * L + q_scale * qint);
        if (j < n)
        {
            qint += q(path.states[j]) * path.h;
            L += path.dL[j];
        }
    }
    return w;
}

double time_integral(PathGrid const& path, PathScalar const& field)
{
    double sum = 0;
    for (std::size_t j = 0; j < path.n_steps(); ++j)
        sum += field(path.states[j]) * path.h;
    return sum;
}

//---------------------------------------------------------------------------//
void write_path_dump(PathGrid const& path, std::filesystem::path const& file)
{
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw Error("cannot open " + file.string() + " for writing");
    auto put = [&](auto const& v) { out.write(reinterpret_cast<char const*>(&v), sizeof v); };
    out.write(kMagic, sizeof kMagic);
    put(static_cast<std::uint32_t>(path.dimension));
    put(static_cast<std::uint64_t>(path.n_steps()));
    put(path.h);
    put(path.seed);
    for (std::size_t j = 0; j < path.states.size(); ++j)
    {
        put(path.time(j));
        for (int i = 0; i < path.dimension; ++i)
            put(path.states[j][i]);
        put(j < path.n_steps() ? path.dL[j] : 0.0);
    }
}

PathGrid read_path_dump(std::filesystem::path const& file)
{
    std::ifstream in(file, std::ios::binary);
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw FieldLoadError("not a path dump: " + file.string());
    auto get = [&](auto& v) {
        if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
            throw FieldLoadError("truncated path dump: " + file.string());
    };
    std::uint32_t dim = 0;
    std::uint64_t n = 0;
    PathGrid path;
    get(dim);
    get(n);
    get(path.h);
    get(path.seed);
    if (dim < 2 || dim > 3)
        throw FieldLoadError("bad dimension in path dump: " + file.string());
    path.dimension = static_cast<int>(dim);
    for (std::uint64_t j = 0; j <= n; ++j)
    {
        double t = 0, dl = 0;
        Vec x(path.dimension);
        get(t);
        for (int i = 0; i < path.dimension; ++i)
            get(x[i]);
        get(dl);
        path.states.push_back(x);
        if (j < n)
            path.dL.push_back(dl);
    }
    return path;
}

}  // namespace nbsde
