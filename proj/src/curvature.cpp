#include "dentkit/curvature.hpp"

#include "dentkit/errors.hpp"
#include "dentkit/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dentkit {

namespace {

double cotangent(const Vec3& apex, const Vec3& a, const Vec3& b) {
    const Vec3 u = a - apex;
    const Vec3 v = b - apex;
    const double cross = u.cross(v).norm();
    if (cross <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return u.dot(v) / cross;
}

}  // namespace

CurvatureField mean_curvature(const std::vector<Vec3>& vertices,
                              const std::vector<Triangle>& triangles,
                              const std::vector<Vec3>& vertex_normals) {
    const int nv = static_cast<int>(vertices.size());
    CurvatureField field;
    field.values.assign(nv, 0.0);

    std::vector<Vec3> laplacian(nv, Vec3::Zero());
    std::vector<double> mixed_area(nv, 0.0);
    std::vector<char> degenerate(nv, 0);
    std::vector<char> has_triangle(nv, 0);

    // Open-boundary detection: any edge with exactly one incident triangle
    // marks both endpoints.
    std::map<std::pair<int, int>, int> edge_count;
    for (const Triangle& tri : triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            ++edge_count[a < b ? std::make_pair(a, b) : std::make_pair(b, a)];
        }
    }
    std::vector<char> boundary(nv, 0);
    for (const auto& [edge, count] : edge_count) {
        if (count == 1) {
            boundary[edge.first] = 1;
            boundary[edge.second] = 1;
        }
    }

    for (const Triangle& tri : triangles) {
        const Vec3& pa = vertices[tri[0]];
        const Vec3& pb = vertices[tri[1]];
        const Vec3& pc = vertices[tri[2]];
        for (int idx : tri) has_triangle[idx] = 1;

        const double cot_a = cotangent(pa, pb, pc);
        const double cot_b = cotangent(pb, pc, pa);
        const double cot_c = cotangent(pc, pa, pb);
        if (!std::isfinite(cot_a) || !std::isfinite(cot_b) || !std::isfinite(cot_c)) {
            for (int idx : tri) degenerate[idx] = 1;
            continue;
        }

        // Cotangent Laplacian: edge (i,j) is weighted by the cotangent of
        // the angle at the opposite corner.
        laplacian[tri[0]] += cot_c * (pa - pb) + cot_b * (pa - pc);
        laplacian[tri[1]] += cot_c * (pb - pa) + cot_a * (pb - pc);
        laplacian[tri[2]] += cot_b * (pc - pa) + cot_a * (pc - pb);

        // Mixed Voronoi area: true Voronoi area inside non-obtuse triangles,
        // half/quarter area splits inside obtuse ones.
        const double area = 0.5 * (pb - pa).cross(pc - pa).norm();
        const bool obtuse_a = cot_a < 0.0, obtuse_b = cot_b < 0.0, obtuse_c = cot_c < 0.0;
        if (!obtuse_a && !obtuse_b && !obtuse_c) {
            const double ab2 = (pa - pb).squaredNorm();
            const double bc2 = (pb - pc).squaredNorm();
            const double ca2 = (pc - pa).squaredNorm();
            mixed_area[tri[0]] += (ab2 * cot_c + ca2 * cot_b) / 8.0;
            mixed_area[tri[1]] += (ab2 * cot_c + bc2 * cot_a) / 8.0;
            mixed_area[tri[2]] += (ca2 * cot_b + bc2 * cot_a) / 8.0;
        } else {
            mixed_area[tri[0]] += obtuse_a ? area / 2.0 : area / 4.0;
            mixed_area[tri[1]] += obtuse_b ? area / 2.0 : area / 4.0;
            mixed_area[tri[2]] += obtuse_c ? area / 2.0 : area / 4.0;
        }
    }

    // Umbrella fallback needs one-ring neighbor sets.
    std::vector<std::vector<int>> neighbors;
    auto build_neighbors = [&]() {
        neighbors.assign(nv, {});
        std::vector<std::set<int>> sets(nv);
        for (const Triangle& tri : triangles) {
            for (int e = 0; e < 3; ++e) {
                sets[tri[e]].insert(tri[(e + 1) % 3]);
                sets[tri[e]].insert(tri[(e + 2) % 3]);
            }
        }
        for (int v = 0; v < nv; ++v) neighbors[v].assign(sets[v].begin(), sets[v].end());
    };

    for (int v = 0; v < nv; ++v) {
        if (boundary[v] || !has_triangle[v]) {
            field.values[v] = 0.0;
            continue;
        }
        Vec3 K;
        if (degenerate[v] || mixed_area[v] <= 1e-300 || !laplacian[v].allFinite()) {
            if (neighbors.empty()) build_neighbors();
            const std::vector<int>& ring = neighbors[v];
            if (ring.empty()) {
                field.values[v] = 0.0;
                field.fallback_vertices.push_back(v);
                continue;
            }
            Vec3 mean = Vec3::Zero();
            double mean_sq_edge = 0.0;
            for (int n : ring) {
                mean += vertices[n];
                mean_sq_edge += (vertices[n] - vertices[v]).squaredNorm();
            }
            mean /= static_cast<double>(ring.size());
            mean_sq_edge /= static_cast<double>(ring.size());
            K = mean_sq_edge > 0.0 ? Vec3(4.0 * (vertices[v] - mean) / mean_sq_edge)
                                   : Vec3(Vec3::Zero());
            field.fallback_vertices.push_back(v);
        } else {
            K = laplacian[v] / (2.0 * mixed_area[v]);
        }
        const double magnitude = 0.5 * K.norm();
        const double side = K.dot(vertex_normals[v]);
        field.values[v] = side < 0.0 ? -magnitude : magnitude;
    }
    return field;
}

CurvatureField mean_curvature(const TriangleMesh& mesh) {
    if (mesh.has_normals()) {
        return mean_curvature(mesh.vertices, mesh.triangles, mesh.vertex_normals);
    }
    const TriangleMesh with_normals = compute_vertex_normals(mesh);
    return mean_curvature(with_normals.vertices, with_normals.triangles,
                          with_normals.vertex_normals);
}

std::vector<std::array<unsigned char, 3>> curvature_colors(const CurvatureField& field) {
    const size_t n = field.values.size();
    std::vector<double> sorted = field.values;
    std::sort(sorted.begin(), sorted.end());
    auto percentile = [&](double p) {
        const auto rank = static_cast<size_t>(
            std::llround(p / 100.0 * static_cast<double>(n - 1)));
        return sorted[std::min(rank, n - 1)];
    };
    const double lo = percentile(2.0);
    const double hi = percentile(98.0);
    const double span = hi - lo;

    std::vector<std::array<unsigned char, 3>> colors(n);
    for (size_t v = 0; v < n; ++v) {
        const double t =
            span > 0.0 ? std::clamp((field.values[v] - lo) / span, 0.0, 1.0) : 0.5;
        colors[v] = {static_cast<unsigned char>(std::lround(255.0 * (1.0 - t))), 0,
                     static_cast<unsigned char>(std::lround(255.0 * t))};
    }
    return colors;
}

void export_curvature_colormap(const TriangleMesh& mesh, const CurvatureField& field,
                               const std::string& path) {
    if (field.values.size() != mesh.vertices.size()) {
        throw LengthMismatch("curvature field length does not match vertex count");
    }
    save_ply_with_colors(mesh, curvature_colors(field), path);
}

}  // namespace dentkit
