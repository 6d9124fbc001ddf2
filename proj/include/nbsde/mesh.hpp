#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "nbsde/geometry.hpp"

namespace nbsde
{
using Point2 = Eigen::Vector2d;

//---------------------------------------------------------------------------//
/*!
 * Conforming P1 triangulation of a planar domain.
 *
 * Triangles are counterclockwise. Boundary edges are oriented so the domain
 * lies to their left; the outward normal points to the right.
 */
struct Mesh
{
    std::vector<Point2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> boundary_edges;
    double h_max = 0;

    std::size_t n_nodes() const { return nodes.size(); }
    std::size_t n_triangles() const { return triangles.size(); }
};

struct MeshOptions
{
    std::size_t node_budget = 100000;
};

/*!
 * Concentric-ring triangulation.
 *
 * The disk gets ceil(1.2·R/h) rings with 6k nodes on ring k; neighboring rings
 * are stitched by a zipper that always advances the ring whose next node
 * has the smaller angle. Outer nodes lie exactly on the boundary. The
 * ellipse is the affine image of the unit disk mesh.
 */
Mesh build_mesh(Domain const& domain, double h_target, MeshOptions const& options = {});

struct MeshQuality
{
    double area = 0;
    double boundary_length = 0;
    double h_max = 0;
    double min_angle_deg = 0;
    double min_signed_area = 0;
    bool conforming = false;  //!< every edge has one or two triangles; boundary edges one
    double max_boundary_psi = 0;
};

MeshQuality mesh_quality(Mesh const& mesh, Domain const& domain);

double triangle_area(Mesh const& mesh, std::size_t t);

void write_mesh(Mesh const& mesh, std::filesystem::path const& path);
Mesh read_mesh(std::filesystem::path const& path);

//! CSV with header node,x,y,value.
void write_field_csv(Mesh const& mesh,
                     Eigen::VectorXd const& values,
                     std::filesystem::path const& path);
//! Reads values; throws FieldLoadError on malformed input or node mismatch.
Eigen::VectorXd read_field_csv(Mesh const& mesh, std::filesystem::path const& path);

}  // namespace nbsde
