#include "dentkit/synthetic.hpp"

#include "dentkit/errors.hpp"

#include <cmath>
#include <map>

namespace dentkit {

TriangleMesh make_plane_grid(int nx, int ny, double extent_x, double extent_y) {
    if (nx < 2 || ny < 2) throw Error("plane grid needs at least 2x2 vertices");
    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double x = extent_x * (static_cast<double>(i) / (nx - 1) - 0.5);
            const double y = extent_y * (static_cast<double>(j) / (ny - 1) - 0.5);
            mesh.vertices.emplace_back(x, y, 0.0);
        }
    }
    auto at = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            mesh.triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            mesh.triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    return mesh;
}

namespace {

// Icosahedron with circumradius 1.
void icosahedron(std::vector<Vec3>& verts, std::vector<Triangle>& faces) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double inv_len = 1.0 / std::sqrt(1.0 + phi * phi);
    auto v = [&](double a, double b, double c) { verts.push_back(Vec3(a, b, c) * inv_len); };
    v(-1, phi, 0); v(1, phi, 0); v(-1, -phi, 0); v(1, -phi, 0);
    v(0, -1, phi); v(0, 1, phi); v(0, -1, -phi); v(0, 1, -phi);
    v(phi, 0, -1); v(phi, 0, 1); v(-phi, 0, -1); v(-phi, 0, 1);
    faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
}

}  // namespace

TriangleMesh make_icosphere(int frequency, double radius, const Vec3& center) {
    if (frequency < 1) throw Error("icosphere frequency must be >= 1");
    std::vector<Vec3> base_verts;
    std::vector<Triangle> base_faces;
    icosahedron(base_verts, base_faces);

    TriangleMesh mesh;
    const int f = frequency;
    auto project = [&](const Vec3& p) { return center + radius * p.normalized(); };

    // Corner vertices are shared across all faces; edge-interior vertices are
    // shared by the two faces of an edge and indexed from the lower corner.
    std::vector<int> corner_index(base_verts.size(), -1);
    std::map<std::tuple<int, int, int>, int> edge_index;  // (lo, hi, step from lo)

    auto corner = [&](int c) {
        if (corner_index[c] < 0) {
            corner_index[c] = mesh.vertex_count();
            mesh.vertices.push_back(project(base_verts[c]));
        }
        return corner_index[c];
    };
    auto edge_point = [&](int a, int b, int step) {
        // step in 1..f-1 measured from a toward b
        const int lo = std::min(a, b), hi = std::max(a, b);
        const int canonical = a == lo ? step : f - step;
        auto key = std::make_tuple(lo, hi, canonical);
        auto it = edge_index.find(key);
        if (it == edge_index.end()) {
            const Vec3 p = base_verts[lo] + (base_verts[hi] - base_verts[lo]) *
                                                (static_cast<double>(canonical) / f);
            it = edge_index.emplace(key, mesh.vertex_count()).first;
            mesh.vertices.push_back(project(p));
        }
        return it->second;
    };

    for (const Triangle& face : base_faces) {
        const int a = face[0], b = face[1], c = face[2];
        // Index grid: rows i = 0..f, row i has i+1 points; P(i,j) with j <= i,
        // P = A + (B-A)*i/f + (C-B)*j/f.
        std::vector<std::vector<int>> grid(f + 1);
        for (int i = 0; i <= f; ++i) {
            grid[i].resize(i + 1);
            for (int j = 0; j <= i; ++j) {
                int idx;
                if (i == 0) {
                    idx = corner(a);
                } else if (i == f && j == 0) {
                    idx = corner(b);
                } else if (i == f && j == f) {
                    idx = corner(c);
                } else if (j == 0) {
                    idx = edge_point(a, b, i);
                } else if (j == i) {
                    idx = edge_point(a, c, i);
                } else if (i == f) {
                    idx = edge_point(b, c, j);
                } else {
                    const Vec3 p = base_verts[a] +
                                   (base_verts[b] - base_verts[a]) * (static_cast<double>(i) / f) +
                                   (base_verts[c] - base_verts[b]) * (static_cast<double>(j) / f);
                    idx = mesh.vertex_count();
                    mesh.vertices.push_back(project(p));
                }
                grid[i][j] = idx;
            }
        }
        for (int i = 0; i < f; ++i) {
            for (int j = 0; j <= i; ++j) {
                mesh.triangles.push_back({grid[i][j], grid[i + 1][j], grid[i + 1][j + 1]});
                if (j < i) {
                    mesh.triangles.push_back({grid[i][j], grid[i + 1][j + 1], grid[i][j + 1]});
                }
            }
        }
    }
    return mesh;
}

std::vector<Vec3> crown_slab_centers(const CrownSlabParams& params) {
    std::vector<Vec3> centers;
    const int n = params.crown_count;
    const double span = params.extent_x * 0.75;
    for (int i = 0; i < n; ++i) {
        const double x = n == 1 ? 0.0 : span * (static_cast<double>(i) / (n - 1) - 0.5);
        const double y = 0.30 * x * x - 0.12;  // shallow arch
        centers.emplace_back(x, y, 0.0);
    }
    return centers;
}

TriangleMesh make_crown_slab(const CrownSlabParams& params) {
    if (params.crown_count < 1) throw Error("crown slab needs at least one crown");
    TriangleMesh mesh = make_plane_grid(params.nx, params.ny, params.extent_x, params.extent_y);
    const std::vector<Vec3> centers = crown_slab_centers(params);

    mesh.vertex_labels.assign(mesh.vertices.size(), 0);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        Vec3& p = mesh.vertices[v];
        double z = params.ripple_amplitude * std::sin(params.ripple_frequency * p.x()) *
                   std::sin(params.ripple_frequency * p.y());
        for (size_t c = 0; c < centers.size(); ++c) {
            const double r = std::hypot(p.x() - centers[c].x(), p.y() - centers[c].y());
            if (r < params.crown_radius) {
                // Smooth dome: positive curvature at the apex, a
                // negative-curvature fillet ring at the rim.
                z += 0.5 * params.crown_height *
                     (1.0 + std::cos(M_PI * r / params.crown_radius));
                mesh.vertex_labels[v] = static_cast<int>(c) + 1;
            }
        }
        p.z() = z;
    }
    return mesh;
}

TriangleMesh make_bowtie_edge() {
    TriangleMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 1, 0), Vec3(0.5, -1, 0.2),
                     Vec3(0.5, 0, 1)};
    mesh.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 1, 4}};
    return mesh;
}

TriangleMesh make_bowtie_vertex() {
    TriangleMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0),  Vec3(1, 1, 0),
                     Vec3(-1, 0, 0), Vec3(-1, -1, 0)};
    mesh.triangles = {{0, 1, 2}, {0, 3, 4}};
    return mesh;
}

TriangleMesh make_cube(const Vec3& center, double edge) {
    TriangleMesh mesh;
    const double h = edge / 2.0;
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.emplace_back(center.x() + ((i & 1) ? h : -h),
                                   center.y() + ((i & 2) ? h : -h),
                                   center.z() + ((i & 4) ? h : -h));
    }
    mesh.triangles = {{0, 2, 1}, {1, 2, 3},   // z-
                      {4, 5, 6}, {5, 7, 6},   // z+
                      {0, 1, 4}, {1, 5, 4},   // y-
                      {2, 6, 3}, {3, 6, 7},   // y+
                      {0, 4, 2}, {2, 4, 6},   // x-
                      {1, 3, 5}, {3, 7, 5}};  // x+
    return mesh;
}

}  // namespace dentkit
