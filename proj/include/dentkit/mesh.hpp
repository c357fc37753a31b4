#pragma once

#include "dentkit/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace dentkit {

// Number of semantic classes: gingiva/background (0) plus teeth T1..T16.
inline constexpr int kNumClasses = 17;

using Triangle = std::array<int, 3>;

// Indexed triangle surface with optional per-vertex labels and normals.
// All operations treat instances as immutable values; they return new meshes.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<Vec3> vertex_normals;   // empty or one unit vector per vertex
    std::vector<int> vertex_labels;     // empty or one class id in [0,16] per vertex

    bool has_normals() const { return !vertex_normals.empty(); }
    bool has_labels() const { return !vertex_labels.empty(); }
    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

// Point set with unit normals, as consumed by segmentation networks.
struct LabeledPointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<int> labels;  // empty or one class id per point

    bool has_labels() const { return !labels.empty(); }
    int count() const { return static_cast<int>(points.size()); }
};

struct MeshStats {
    int vertex_count = 0;
    int triangle_count = 0;
    Vec3 bbox_min = Vec3::Zero();
    Vec3 bbox_max = Vec3::Zero();
    int nonmanifold_edge_count = 0;
    int degenerate_triangles_dropped = 0;
};

// Record of the centering/scaling applied by normalize_coordinates;
// apply_inverse(apply(p)) == p.
struct NormalizeTransform {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
    Vec3 apply_inverse(const Vec3& p) const { return p / scale + center; }
};

// Throws Error if any structural invariant is violated (bad indices,
// degenerate index triples, label range, label/normal array lengths).
void validate_mesh(const TriangleMesh& mesh);

MeshStats compute_stats(const TriangleMesh& mesh);

// Counts edges incident to more than two triangles.
int count_nonmanifold_edges(const TriangleMesh& mesh);

// Repairs non-manifold topology by vertex duplication: first gives every
// over-shared edge (>2 incident triangles) private vertex copies for the
// extra triangles, then cuts each vertex whose incident-triangle fan is
// edge-disconnected into one copy per connected fan. Triangle count is
// unchanged; duplicated vertices inherit position/normal/label. Idempotent
// on manifold input.
TriangleMesh split_nonmanifold_vertices(const TriangleMesh& mesh);

// Centers the mesh at its bounding-box center and scales the largest bbox
// dimension to 1. Throws DegenerateMesh on a zero-extent bbox.
std::pair<TriangleMesh, NormalizeTransform> normalize_coordinates(const TriangleMesh& mesh);

// Area-weighted average of incident face normals, unit length, orientation
// from triangle winding. Vertices whose incident triangles are all
// degenerate (or that have none) get +Z and are reported in the returned
// flag list.
TriangleMesh compute_vertex_normals(const TriangleMesh& mesh,
                                    std::vector<int>* zero_area_fan_vertices = nullptr);

// One point per vertex; computes normals first if the mesh has none.
LabeledPointCloud mesh_to_pointcloud(const TriangleMesh& mesh);

}  // namespace dentkit
