#pragma once

#include "dentkit/mesh.hpp"

#include <string>
#include <vector>

namespace dentkit {

// Per-vertex mean curvature H. Sign convention: convex toward the outward
// normal is positive, concave (tooth-gingiva valley) negative.
struct CurvatureField {
    std::vector<double> values;
    // Vertices where the cotangent operator degenerated and the uniform
    // (umbrella) fallback was used instead.
    std::vector<int> fallback_vertices;
};

// Discrete mean curvature from the cotangent Laplace-Beltrami operator with
// mixed Voronoi areas: H = |K|/2 signed by dot(K, vertex normal), where K is
// the mean-curvature normal. Open-boundary vertices get H = 0. Works on any
// (vertices, triangles, normals) triple so the simplifier can evaluate it on
// a partially collapsed mesh.
CurvatureField mean_curvature(const std::vector<Vec3>& vertices,
                              const std::vector<Triangle>& triangles,
                              const std::vector<Vec3>& vertex_normals);

// Convenience overload; computes area-weighted normals first when absent.
CurvatureField mean_curvature(const TriangleMesh& mesh);

// Writes a colored PLY: lowest H -> red (255,0,0), highest H -> blue
// (0,0,255), linear in between, clamped at the 2nd/98th percentiles.
void export_curvature_colormap(const TriangleMesh& mesh, const CurvatureField& field,
                               const std::string& path);

// The color ramp used by the exporter, exposed for tests.
std::vector<std::array<unsigned char, 3>> curvature_colors(const CurvatureField& field);

}  // namespace dentkit
