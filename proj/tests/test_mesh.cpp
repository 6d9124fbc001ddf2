#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <doctest.h>

#include "nbsde/errors.hpp"
#include "nbsde/mesh.hpp"

using namespace nbsde;
using std::numbers::pi;

namespace
{
std::filesystem::path scratch(std::string const& name)
{
    auto dir = std::filesystem::temp_directory_path() / "nbsde_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}
}  // namespace

TEST_SUITE("mesh")
{
    TEST_CASE("disk mesh measures")
    {
        Mesh const m = build_mesh(Domain::disk(), 0.2);
        MeshQuality const q = mesh_quality(m, Domain::disk());
        CHECK(std::abs(q.area - pi) < 0.02 * pi);
        CHECK(std::abs(q.boundary_length - 2 * pi) < 0.02 * 2 * pi);
        CHECK(q.conforming);
        CHECK(q.min_signed_area > 0);
        CHECK(q.h_max <= 1.5 * 0.2);
        CHECK(q.min_angle_deg >= 20);
    }

    TEST_CASE("area error is second order and boundary nodes lie on the circle")
    {
        double prev = 0;
        for (double h : {0.2, 0.1, 0.05})
        {
            Mesh const m = build_mesh(Domain::disk(), h);
            MeshQuality const q = mesh_quality(m, Domain::disk());
            double const err = std::abs(q.area - pi);
            CHECK(err <= 2 * q.h_max * q.h_max);
            CHECK(q.max_boundary_psi <= 1e-12 + q.h_max * q.h_max);
            if (prev > 0)
                CHECK(err < prev / 3);
            prev = err;
        }
    }

    TEST_CASE("ellipse mesh")
    {
        Domain const e = Domain::ellipse(2, 1);
        Mesh const m = build_mesh(e, 0.1);
        MeshQuality const q = mesh_quality(m, e);
        CHECK(q.conforming);
        CHECK(q.min_signed_area > 0);
        CHECK(std::abs(q.area - e.volume()) < 0.01 * e.volume());
        CHECK(std::abs(q.boundary_length - e.boundary_measure()) < 0.01 * e.boundary_measure());
        CHECK(q.max_boundary_psi < 1e-12);
    }

    TEST_CASE("bad resolutions and unsupported domains")
    {
        CHECK_THROWS_AS(build_mesh(Domain::disk(), 0), BadResolution);
        CHECK_THROWS_AS(build_mesh(Domain::disk(), -0.1), BadResolution);
        CHECK_THROWS_AS(build_mesh(Domain::disk(), 3), BadResolution);
        CHECK_THROWS_AS(build_mesh(Domain::disk(), 1e-4), BadResolution);
        CHECK_THROWS_AS(build_mesh(Domain::ball(3), 0.1), UnsupportedDomain);
    }

    TEST_CASE("boundary edges are oriented with the domain on their left")
    {
        Mesh const m = build_mesh(Domain::disk(), 0.2);
        for (auto const& e : m.boundary_edges)
        {
            Point2 const a = m.nodes[e[0]], b = m.nodes[e[1]];
            CHECK(a.x() * b.y() - a.y() * b.x() > 0);
        }
    }

    TEST_CASE("mesh and field files round trip")
    {
        Mesh const m = build_mesh(Domain::disk(), 0.25);
        write_mesh(m, scratch("mesh.txt"));
        Mesh const r = read_mesh(scratch("mesh.txt"));
        REQUIRE(r.n_nodes() == m.n_nodes());
        CHECK(r.triangles == m.triangles);
        CHECK(r.boundary_edges == m.boundary_edges);
        for (std::size_t i = 0; i < m.n_nodes(); ++i)
            CHECK(r.nodes[i] == m.nodes[i]);

        Eigen::VectorXd values(m.n_nodes());
        for (std::size_t i = 0; i < m.n_nodes(); ++i)
            values[static_cast<Eigen::Index>(i)] = std::sin(7 * m.nodes[i].x()) / 3;
        write_field_csv(m, values, scratch("field.csv"));
        Eigen::VectorXd const back = read_field_csv(m, scratch("field.csv"));
        CHECK(back == values);

        Mesh const other = build_mesh(Domain::disk(), 0.2);
        CHECK_THROWS_AS(read_field_csv(other, scratch("field.csv")), FieldLoadError);
        CHECK_THROWS_AS(read_field_csv(m, scratch("missing.csv")), FieldLoadError);
        std::ofstream(scratch("garbage.csv")) << "node,x,y,value\n0,abc,0,1\n";
        CHECK_THROWS_AS(read_field_csv(m, scratch("garbage.csv")), FieldLoadError);
    }
}
