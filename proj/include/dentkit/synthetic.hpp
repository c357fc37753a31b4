#pragma once

#include "dentkit/mesh.hpp"

namespace dentkit {

// Regular nx x ny vertex grid in the z=0 plane, CCW winding (+Z normals),
// centered at the origin, spanning extent_x by extent_y.
TriangleMesh make_plane_grid(int nx, int ny, double extent_x = 1.0, double extent_y = 1.0);

// Geodesic icosphere: each icosahedron face is divided into frequency^2
// triangles and vertices are projected onto the sphere. Vertex count is
// 10*frequency^2 + 2. CCW winding, outward normals.
TriangleMesh make_icosphere(int frequency, double radius = 1.0, const Vec3& center = Vec3::Zero());

struct CrownSlabParams {
    int nx = 256;             // grid vertices along x
    int ny = 196;             // grid vertices along y
    double extent_x = 2.4;
    double extent_y = 1.7;
    int crown_count = 6;      // crowns placed along a shallow arch
    double crown_radius = 0.16;
    double crown_height = 0.15;
    double ripple_amplitude = 0.012;  // gingiva texture so flat-region collapses are not free
    double ripple_frequency = 21.0;
};

// Labeled synthetic intraoral stand-in: a rippled slab ("gingiva", label 0)
// with smooth dome crowns (labels 1..crown_count). Each crown rim is a
// negative-mean-curvature valley ring that coincides with the label
// boundary. Height field geometry: every vertex normal points up.
TriangleMesh make_crown_slab(const CrownSlabParams& params = {});

// Crown center positions in the slab's xy plane (label i+1 belongs to
// centers[i]); used by tests that reason about the valley annuli.
std::vector<Vec3> crown_slab_centers(const CrownSlabParams& params = {});

// Three triangles sharing the edge (0,1); a non-manifold fixture.
TriangleMesh make_bowtie_edge();

// Two triangle fans meeting only at vertex 0; a non-manifold fixture.
TriangleMesh make_bowtie_vertex();

// Axis-aligned cube surface (8 vertices, 12 triangles, outward winding).
TriangleMesh make_cube(const Vec3& center = Vec3::Zero(), double edge = 1.0);

}  // namespace dentkit
