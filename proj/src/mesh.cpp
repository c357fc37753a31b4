#include "dentkit/mesh.hpp"

#include "dentkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace dentkit {

namespace {

// Undirected edge key.
std::pair<int, int> edge_key(int a, int b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::map<std::pair<int, int>, std::vector<int>> collect_edge_triangles(const TriangleMesh& mesh) {
    std::map<std::pair<int, int>, std::vector<int>> edges;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Triangle& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            edges[edge_key(tri[e], tri[(e + 1) % 3])].push_back(t);
        }
    }
    return edges;
}

}  // namespace

void validate_mesh(const TriangleMesh& mesh) {
    const int nv = mesh.vertex_count();
    for (const Triangle& tri : mesh.triangles) {
        for (int idx : tri) {
            if (idx < 0 || idx >= nv) throw Error("triangle index out of range");
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw Error("degenerate triangle (repeated vertex index)");
        }
    }
    if (mesh.has_normals()) {
        if (static_cast<int>(mesh.vertex_normals.size()) != nv) {
            throw Error("normal array length does not match vertex count");
        }
        for (const Vec3& n : mesh.vertex_normals) {
            if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("vertex normal is not unit length");
        }
    }
    if (mesh.has_labels()) {
        if (static_cast<int>(mesh.vertex_labels.size()) != nv) {
            throw LabelMismatch("label array length does not match vertex count");
        }
        for (int label : mesh.vertex_labels) {
            if (label < 0 || label >= kNumClasses) throw Error("vertex label outside [0,16]");
        }
    }
}

MeshStats compute_stats(const TriangleMesh& mesh) {
    MeshStats stats;
    stats.vertex_count = mesh.vertex_count();
    stats.triangle_count = mesh.triangle_count();
    Aabb box = bounding_box(mesh.vertices);
    if (!box.empty()) {
        stats.bbox_min = box.min;
        stats.bbox_max = box.max;
    }
    stats.nonmanifold_edge_count = count_nonmanifold_edges(mesh);
    return stats;
}

int count_nonmanifold_edges(const TriangleMesh& mesh) {
    int count = 0;
    for (const auto& [edge, tris] : collect_edge_triangles(mesh)) {
        if (tris.size() > 2) ++count;
    }
    return count;
}

namespace {

struct VertexCopier {
    TriangleMesh& mesh;

    int duplicate(int v) {
        mesh.vertices.push_back(mesh.vertices[v]);
        if (mesh.has_normals()) mesh.vertex_normals.push_back(mesh.vertex_normals[v]);
        if (mesh.has_labels()) mesh.vertex_labels.push_back(mesh.vertex_labels[v]);
        return mesh.vertex_count() - 1;
    }
};

// Replaces vertex `from` with `to` inside triangle t.
void retarget(Triangle& tri, int from, int to) {
    for (int& idx : tri) {
        if (idx == from) idx = to;
    }
}

}  // namespace

TriangleMesh split_nonmanifold_vertices(const TriangleMesh& mesh) {
    TriangleMesh out = mesh;
    VertexCopier copier{out};

    // Phase 1: edges with more than two incident triangles. The first two
    // triangles keep the original edge; every extra triangle gets private
    // copies of both endpoints.
    {
        auto edges = collect_edge_triangles(out);
        for (const auto& [edge, tris] : edges) {
            if (tris.size() <= 2) continue;
            for (size_t i = 2; i < tris.size(); ++i) {
                const int t = tris[i];
                const int a = copier.duplicate(edge.first);
                const int b = copier.duplicate(edge.second);
                retarget(out.triangles[t], edge.first, a);
                retarget(out.triangles[t], edge.second, b);
            }
        }
    }

    // Phase 2: cut vertices whose incident-triangle fan is disconnected.
    // Two incident triangles are fan-connected iff they share an edge
    // through the vertex and that edge has exactly two incident triangles.
    {
        auto edges = collect_edge_triangles(out);
        const int nv = out.vertex_count();
        std::vector<std::vector<int>> incident(nv);
        for (int t = 0; t < out.triangle_count(); ++t) {
            for (int idx : out.triangles[t]) incident[idx].push_back(t);
        }

        for (int v = 0; v < nv; ++v) {
            const std::vector<int>& fan = incident[v];
            if (fan.size() < 2) continue;

            // Union-find over the fan triangles.
            std::vector<int> parent(fan.size());
            std::iota(parent.begin(), parent.end(), 0);
            auto find = [&](int x) {
                while (parent[x] != x) x = parent[x] = parent[parent[x]];
                return x;
            };
            auto local_index = [&](int tri_id) {
                return static_cast<int>(std::lower_bound(fan.begin(), fan.end(), tri_id) - fan.begin());
            };
            for (size_t fi = 0; fi < fan.size(); ++fi) {
                const Triangle& tri = out.triangles[fan[fi]];
                for (int e = 0; e < 3; ++e) {
                    const int a = tri[e];
                    const int b = tri[(e + 1) % 3];
                    if (a != v && b != v) continue;
                    const auto& shared = edges.at(edge_key(a, b));
                    if (shared.size() != 2) continue;
                    const int other = shared[0] == fan[fi] ? shared[1] : shared[0];
                    parent[find(static_cast<int>(fi))] = find(local_index(other));
                }
            }

            // First component keeps v; the rest get copies.
            std::map<int, int> component_vertex;
            for (size_t fi = 0; fi < fan.size(); ++fi) {
                const int root = find(static_cast<int>(fi));
                auto it = component_vertex.find(root);
                if (it == component_vertex.end()) {
                    const int target = component_vertex.empty() ? v : copier.duplicate(v);
                    it = component_vertex.emplace(root, target).first;
                }
                if (it->second != v) retarget(out.triangles[fan[fi]], v, it->second);
            }
        }
    }

    return out;
}

std::pair<TriangleMesh, NormalizeTransform> normalize_coordinates(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw DegenerateMesh("empty mesh");
    Aabb box = bounding_box(mesh.vertices);
    const double max_extent = box.extent().maxCoeff();
    if (max_extent <= 0.0) throw DegenerateMesh("bounding box has zero extent");

    NormalizeTransform transform;
    transform.center = box.center();
    transform.scale = 1.0 / max_extent;

    TriangleMesh out = mesh;
    for (Vec3& p : out.vertices) p = transform.apply(p);
    return {std::move(out), transform};
}

TriangleMesh compute_vertex_normals(const TriangleMesh& mesh,
                                    std::vector<int>* zero_area_fan_vertices) {
    TriangleMesh out = mesh;
    out.vertex_normals.assign(mesh.vertex_count(), Vec3::Zero());

    for (const Triangle& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        // Cross product length is twice the area, so this is area weighting.
        const Vec3 weighted_normal = (b - a).cross(c - a);
        for (int idx : tri) out.vertex_normals[idx] += weighted_normal;
    }

    if (zero_area_fan_vertices) zero_area_fan_vertices->clear();
    for (int v = 0; v < out.vertex_count(); ++v) {
        const double len = out.vertex_normals[v].norm();
        if (len > 0.0) {
            out.vertex_normals[v] /= len;
        } else {
            out.vertex_normals[v] = Vec3(0, 0, 1);
            if (zero_area_fan_vertices) zero_area_fan_vertices->push_back(v);
        }
    }
    return out;
}

LabeledPointCloud mesh_to_pointcloud(const TriangleMesh& mesh) {
    const TriangleMesh* source = &mesh;
    TriangleMesh with_normals;
    if (!mesh.has_normals()) {
        with_normals = compute_vertex_normals(mesh);
        source = &with_normals;
    }

    LabeledPointCloud cloud;
    cloud.points = source->vertices;
    cloud.normals = source->vertex_normals;
    cloud.labels = source->vertex_labels;
    return cloud;
}

}  // namespace dentkit
