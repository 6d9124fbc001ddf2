#include "nbsde/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "nbsde/errors.hpp"

namespace nbsde
{
namespace
{
double signed_area(Point2 const& a, Point2 const& b, Point2 const& c)
{
    return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

void add_triangle(Mesh& mesh, int a, int b, int c)
{
    if (signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0)
        std::swap(b, c);
    mesh.triangles.push_back({a, b, c});
}

Mesh unit_disk_mesh(int n_rings)
{
    Mesh mesh;
    double const two_pi = 2 * std::numbers::pi;
    std::vector<int> ring_start(static_cast<std::size_t>(n_rings) + 1);
    mesh.nodes.emplace_back(0.0, 0.0);
    for (int k = 1; k <= n_rings; ++k)
    {
        ring_start[k] = static_cast<int>(mesh.nodes.size());
        double const r = static_cast<double>(k) / n_rings;
        int const count = 6 * k;
        for (int j = 0; j < count; ++j)
        {
            double const theta = two_pi * j / count;
            mesh.nodes.emplace_back(r * std::cos(theta), r * std::sin(theta));
        }
    }
    // Exact radius on the outer ring
    for (int j = ring_start[n_rings]; j < static_cast<int>(mesh.nodes.size()); ++j)
        mesh.nodes[j] /= mesh.nodes[j].norm();

    for (int j = 0; j < 6; ++j)
        add_triangle(mesh, 0, ring_start[1] + j, ring_start[1] + (j + 1) % 6);

    for (int k = 2; k <= n_rings; ++k)
    {
        int const m = 6 * (k - 1);
        int const n = 6 * k;
        int const a0 = ring_start[k - 1];
        int const b0 = ring_start[k];
        int i = 0, j = 0;
        while (i < m || j < n)
        {
            double const next_a = static_cast<double>(i + 1) / m;
            double const next_b = static_cast<double>(j + 1) / n;
            bool const advance_outer = i == m || (j < n && next_b <= next_a);
            if (advance_outer)
            {
                add_triangle(mesh, a0 + i % m, b0 + j, b0 + (j + 1) % n);
                ++j;
            }
            else
            {
                add_triangle(mesh, a0 + i, b0 + j % n, a0 + (i + 1) % m);
                ++i;
            }
        }
    }

    int const outer = ring_start[n_rings];
    int const n_outer = 6 * n_rings;
    for (int j = 0; j < n_outer; ++j)
        mesh.boundary_edges.push_back({outer + j, outer + (j + 1) % n_outer});
    return mesh;
}

double compute_h_max(Mesh const& mesh)
{
    double h = 0;
    for (auto const& t : mesh.triangles)
        for (int e = 0; e < 3; ++e)
            h = std::max(h, (mesh.nodes[t[e]] - mesh.nodes[t[(e + 1) % 3]]).norm());
    return h;
}

}  // namespace

Mesh build_mesh(Domain const& domain, double h_target, MeshOptions const& options)
{
    if (!(h_target > 0) || !std::isfinite(h_target))
        throw BadResolution("mesh size must be positive, got " + std::to_string(h_target));
    if (domain.dimension() != 2)
        throw UnsupportedDomain("meshing is only available in two dimensions");
    if (!(h_target < domain.diameter()))
        throw BadResolution("mesh size must be smaller than the domain diameter");

    auto const [a, b] = domain.kind() == DomainKind::ball
                            ? std::array<double, 2>{domain.radius(), domain.radius()}
                            : domain.semi_axes();
    // Zipper diagonals are up to √3 times the ring spacing
    int const n_rings = static_cast<int>(std::ceil(1.2 * std::max(a, b) / h_target - 1e-9));
    double const n_nodes = 1.0 + 3.0 * n_rings * (n_rings + 1.0);
    if (n_nodes > static_cast<double>(options.node_budget))
        throw BadResolution("mesh would have " + std::to_string(static_cast<long long>(n_nodes))
                            + " nodes, above the budget of "
                            + std::to_string(options.node_budget));

    Mesh mesh = unit_disk_mesh(n_rings);
    for (auto& p : mesh.nodes)
        p = Point2(a * p.x(), b * p.y());
    mesh.h_max = compute_h_max(mesh);
    return mesh;
}

double triangle_area(Mesh const& mesh, std::size_t t)
{
    auto const& tri = mesh.triangles[t];
    return signed_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
}

MeshQuality mesh_quality(Mesh const& mesh, Domain const& domain)
{
    MeshQuality q;
    q.min_angle_deg = 180;
    q.min_signed_area = std::numeric_limits<double>::infinity();
    std::map<std::pair<int, int>, int> edge_count;
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
    {
        auto const& tri = mesh.triangles[t];
        double const area = triangle_area(mesh, t);
        q.area += area;
        q.min_signed_area = std::min(q.min_signed_area, area);
        for (int e = 0; e < 3; ++e)
        {
            Point2 const& p = mesh.nodes[tri[e]];
            Point2 const u = mesh.nodes[tri[(e + 1) % 3]] - p;
            Point2 const v = mesh.nodes[tri[(e + 2) % 3]] - p;
            double const angle = std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
            q.min_angle_deg = std::min(q.min_angle_deg, angle * 180 / std::numbers::pi);
            q.h_max = std::max(q.h_max, u.norm());
            int const i = tri[e], j = tri[(e + 1) % 3];
            ++edge_count[{std::min(i, j), std::max(i, j)}];
        }
    }
    q.conforming = true;
    std::size_t n_single = 0;
    for (auto const& [edge, count] : edge_count)
    {
        if (count > 2)
            q.conforming = false;
        if (count == 1)
            ++n_single;
    }
    if (n_single != mesh.boundary_edges.size())
        q.conforming = false;
    for (auto const& e : mesh.boundary_edges)
    {
        auto it = edge_count.find({std::min(e[0], e[1]), std::max(e[0], e[1])});
        if (it == edge_count.end() || it->second != 1)
            q.conforming = false;
        q.boundary_length += (mesh.nodes[e[0]] - mesh.nodes[e[1]]).norm();
        Vec x(2);
        x << mesh.nodes[e[0]].x(), mesh.nodes[e[0]].y();
        q.max_boundary_psi = std::max(q.max_boundary_psi, std::abs(eval_psi(domain, x).value));
    }
    return q;
}

//---------------------------------------------------------------------------//
void write_mesh(Mesh const& mesh, std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    char buf[64];
    out << "nbsde-mesh 1\nnodes " << mesh.n_nodes() << '\n';
    for (auto const& p : mesh.nodes)
    {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
        out << buf;
    }
    out << "triangles " << mesh.n_triangles() << '\n';
    for (auto const& t : mesh.triangles)
        out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "boundary_edges " << mesh.boundary_edges.size() << '\n';
    for (auto const& e : mesh.boundary_edges)
        out << e[0] << ' ' << e[1] << '\n';
}

Mesh read_mesh(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw FieldLoadError("cannot open mesh " + path.string());
    auto expect = [&](std::string const& word) {
        std::string w;
        std::size_t n = 0;
        if (!(in >> w >> n) || w != word)
            throw FieldLoadError("malformed mesh file " + path.string() + ": expected '" + word
                                 + "'");
        return n;
    };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "nbsde-mesh" || version != 1)
        throw FieldLoadError("not a mesh file: " + path.string());
    Mesh mesh;
    mesh.nodes.resize(expect("nodes"));
    for (auto& p : mesh.nodes)
        in >> p.x() >> p.y();
    mesh.triangles.resize(expect("triangles"));
    for (auto& t : mesh.triangles)
        in >> t[0] >> t[1] >> t[2];
    mesh.boundary_edges.resize(expect("boundary_edges"));
    for (auto& e : mesh.boundary_edges)
        in >> e[0] >> e[1];
    if (!in)
        throw FieldLoadError("truncated mesh file " + path.string());
    int const n = static_cast<int>(mesh.n_nodes());
    for (auto const& t : mesh.triangles)
        for (int i : t)
            if (i < 0 || i >= n)
                throw FieldLoadError("node index out of range in " + path.string());
    mesh.h_max = compute_h_max(mesh);
    return mesh;
}

void write_field_csv(Mesh const& mesh,
                     Eigen::VectorXd const& values,
                     std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out << "node,x,y,value\n";
    char buf[128];
    for (std::size_t i = 0; i < mesh.n_nodes(); ++i)
    {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, mesh.nodes[i].x(),
                      mesh.nodes[i].y(), values[static_cast<Eigen::Index>(i)]);
        out << buf;
    }
}

Eigen::VectorXd read_field_csv(Mesh const& mesh, std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw FieldLoadError("cannot open field " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "node,x,y,value")
        throw FieldLoadError(path.string() + ": expected header 'node,x,y,value'");
    Eigen::VectorXd values = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(mesh.n_nodes()), std::numeric_limits<double>::quiet_NaN());
    std::size_t line_no = 1;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string cell[4];
        for (auto& c : cell)
            std::getline(row, c, ',');
        try
        {
            std::size_t const node = std::stoul(cell[0]);
            double const x = std::stod(cell[1]);
            double const y = std::stod(cell[2]);
            double const v = std::stod(cell[3]);
            if (node >= mesh.n_nodes())
                throw FieldLoadError("");
            if ((Point2(x, y) - mesh.nodes[node]).norm() > 1e-9)
                throw FieldLoadError("");
            values[static_cast<Eigen::Index>(node)] = v;
        }
        catch (std::exception const&)
        {
            throw FieldLoadError(path.string() + ":" + std::to_string(line_no)
                                 + ": row does not match the mesh");
        }
    }
    if (!values.allFinite())
        throw FieldLoadError(path.string() + ": field does not cover every mesh node");
    return values;
}

}  // namespace nbsde
