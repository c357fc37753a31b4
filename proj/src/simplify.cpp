#include "dentkit/simplify.hpp"

#include "dentkit/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace dentkit {

namespace {
constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();
}

std::vector<Quadric> compute_quadrics(const TriangleMesh& mesh) {
    std::vector<Quadric> quadrics(mesh.vertex_count());
    for (const Triangle& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        const Vec3 cross = (b - a).cross(c - a);
        const double len = cross.norm();
        if (len <= 0.0) continue;
        const Vec3 n = cross / len;
        const double d = -n.dot(a);
        for (int idx : tri) quadrics[idx].add_plane(n, d);
    }
    return quadrics;
}

ContractionTarget optimal_contraction_target(const Quadric& q1, const Quadric& q2,
                                             const Vec3& v1, const Vec3& v2) {
    const Quadric q = q1 + q2;
    const Mat3 a = q.m.topLeftCorner<3, 3>();
    const Vec3 b = q.m.topRightCorner<3, 1>();

    ContractionTarget result;
    const double scale = a.norm();
    const double det = a.determinant();
    if (scale > 0.0 && std::abs(det) / (scale * scale * scale) >= 1e-12) {
        result.position = a.partialPivLu().solve(-b);
        result.base_cost = std::max(0.0, q.evaluate(result.position));
        return result;
    }

    // Singular system: best of the endpoints and the midpoint, first wins ties.
    result.used_fallback = true;
    const Vec3 candidates[3] = {v1, v2, 0.5 * (v1 + v2)};
    result.position = candidates[0];
    result.base_cost = std::max(0.0, q.evaluate(candidates[0]));
    for (int i = 1; i < 3; ++i) {
        const double cost = std::max(0.0, q.evaluate(candidates[i]));
        if (cost < result.base_cost) {
            result.base_cost = cost;
            result.position = candidates[i];
        }
    }
    return result;
}

double edge_collapse_coefficient(const CurvatureField& field, int v1, int v2,
                                 const SimplifyConfig& config) {
    const double mean = 0.5 * (field.values[v1] + field.values[v2]);
    return mean < 0.0 ? config.k_neg : config.k_pos;
}

namespace {

struct HeapEntry {
    double cost;
    int v1, v2;              // v1 < v2
    uint32_t ver1, ver2;
    Vec3 target;
    double base_cost;

    // Min-heap with a total order so equal costs break ties identically
    // regardless of insertion history.
    bool operator>(const HeapEntry& o) const {
        if (cost != o.cost) return cost > o.cost;
        if (v1 != o.v1) return v1 > o.v1;
        if (v2 != o.v2) return v2 > o.v2;
        if (ver1 != o.ver1) return ver1 > o.ver1;
        return ver2 > o.ver2;
    }
};

class CollapseEngine {
public:
    CollapseEngine(const TriangleMesh& mesh, const SimplifyConfig& config, bool weighted,
                   SimplifyTrace* trace)
        : config_(config), weighted_(weighted), trace_(trace) {
        positions_ = mesh.vertices;
        labels_ = mesh.vertex_labels;
        triangles_ = mesh.triangles;
        quadrics_ = compute_quadrics(mesh);
        tri_alive_.assign(triangles_.size(), 1);
        vert_alive_.assign(positions_.size(), 1);
        versions_.assign(positions_.size(), 0);
        incident_.resize(positions_.size());
        for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
            for (int idx : triangles_[t]) incident_[idx].push_back(t);
        }
        alive_vertices_ = static_cast<int>(positions_.size());
        alive_triangles_ = static_cast<int>(triangles_.size());

        refresh_interval_ = config.curvature_refresh_interval > 0
                                ? config.curvature_refresh_interval
                                : std::max(1, alive_vertices_ / 10);
        if (weighted_) refresh_curvature();
        rebuild_heap();
    }

    TriangleMesh run() {
        const bool by_triangles = config_.target_kind == SimplifyTargetKind::Triangles;
        const int target = config_.target_vertex_count;
        auto reached = [&]() {
            return by_triangles ? alive_triangles_ <= target : alive_vertices_ <= target;
        };

        int since_refresh = 0;
        while (!reached()) {
            if (heap_.empty()) {
                throw TargetUnreachable("no collapsible pairs left at " +
                                        std::to_string(alive_vertices_) + " vertices");
            }
            HeapEntry entry = heap_.top();
            heap_.pop();
            if (!is_current(entry)) continue;

            if (!collapse_is_legal(entry)) {
                // Re-queue once at infinite cost; a later neighborhood change
                // re-inserts the pair at its true cost.
                if (entry.cost != kInfiniteCost) {
                    entry.cost = kInfiniteCost;
                    heap_.push(entry);
                }
                continue;
            }

            execute_collapse(entry);
            if (++since_refresh >= refresh_interval_ && !reached()) {
                since_refresh = 0;
                if (weighted_) refresh_curvature();
                rebuild_heap();
                ++epoch_;
            }
        }
        return extract_mesh();
    }

private:
    bool is_current(const HeapEntry& e) const {
        return vert_alive_[e.v1] && vert_alive_[e.v2] && versions_[e.v1] == e.ver1 &&
               versions_[e.v2] == e.ver2;
    }

    // Alive triangles incident to v, compacting the list in passing.
    const std::vector<int>& alive_incident(int v) {
        std::vector<int>& list = incident_[v];
        size_t keep = 0;
        for (int t : list) {
            if (tri_alive_[t]) list[keep++] = t;
        }
        list.resize(keep);
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        return list;
    }

    std::vector<int> neighbors(int v) {
        std::set<int> result;
        for (int t : alive_incident(v)) {
            for (int idx : triangles_[t]) {
                if (idx != v) result.insert(idx);
            }
        }
        return {result.begin(), result.end()};
    }

    std::vector<int> shared_triangles(int v1, int v2) {
        std::vector<int> shared;
        for (int t : alive_incident(v1)) {
            const Triangle& tri = triangles_[t];
            if (tri[0] == v2 || tri[1] == v2 || tri[2] == v2) shared.push_back(t);
        }
        return shared;
    }

    bool collapse_is_legal(const HeapEntry& e) {
        const std::vector<int> shared = shared_triangles(e.v1, e.v2);
        if (shared.empty()) return false;  // no longer an edge

        // Link condition: the joint neighborhood of the endpoints must be
        // exactly the vertices opposite the shared triangles, otherwise the
        // collapse would create a non-manifold edge.
        std::set<int> opposite;
        for (int t : shared) {
            for (int idx : triangles_[t]) {
                if (idx != e.v1 && idx != e.v2) opposite.insert(idx);
            }
        }
        const std::vector<int> n1 = neighbors(e.v1);
        const std::vector<int> n2 = neighbors(e.v2);
        std::vector<int> common;
        std::set_intersection(n1.begin(), n1.end(), n2.begin(), n2.end(),
                              std::back_inserter(common));
        if (common.size() != opposite.size() ||
            !std::equal(common.begin(), common.end(), opposite.begin())) {
            return false;
        }

        // Normal-flip check over every surviving triangle of the joint fan.
        for (int v : {e.v1, e.v2}) {
            for (int t : alive_incident(v)) {
                if (std::find(shared.begin(), shared.end(), t) != shared.end()) continue;
                Vec3 corners[3];
                Vec3 moved[3];
                for (int c = 0; c < 3; ++c) {
                    const int idx = triangles_[t][c];
                    corners[c] = positions_[idx];
                    moved[c] = (idx == e.v1 || idx == e.v2) ? e.target : positions_[idx];
                }
                const Vec3 before =
                    (corners[1] - corners[0]).cross(corners[2] - corners[0]);
                const Vec3 after = (moved[1] - moved[0]).cross(moved[2] - moved[0]);
                if (before.dot(after) <= 0.0) return false;
            }
        }
        return true;
    }

    void execute_collapse(const HeapEntry& e) {
        const int keep = e.v1;
        const int drop = e.v2;
        const int verts_before = alive_vertices_;
        const int tris_before = alive_triangles_;
        const std::vector<int> shared = shared_triangles(keep, drop);

        if (!labels_.empty()) {
            const double d_keep = (e.target - positions_[keep]).norm();
            const double d_drop = (e.target - positions_[drop]).norm();
            if (d_drop < d_keep) labels_[keep] = labels_[drop];
        }
        positions_[keep] = e.target;
        quadrics_[keep] = quadrics_[keep] + quadrics_[drop];
        if (weighted_) {
            // Between refreshes the merged vertex keeps the fresher estimate
            // of the two; the next refresh recomputes it exactly.
            curvature_.values[keep] =
                0.5 * (curvature_.values[keep] + curvature_.values[drop]);
        }

        const int tris_removed = static_cast<int>(shared.size());
        for (int t : shared) tri_alive_[t] = 0;
        alive_triangles_ -= tris_removed;

        for (int t : alive_incident(drop)) {
            Triangle& tri = triangles_[t];
            for (int& idx : tri) {
                if (idx == drop) idx = keep;
            }
            incident_[keep].push_back(t);
        }
        incident_[drop].clear();
        vert_alive_[drop] = 0;
        --alive_vertices_;
        ++versions_[keep];
        ++versions_[drop];

        if (trace_) {
            trace_->collapses.push_back({epoch_, e.cost, alive_vertices_ - verts_before,
                                         alive_triangles_ - tris_before});
        }

        for (int n : neighbors(keep)) push_candidate(keep, n);
    }

    void push_candidate(int a, int b) {
        if (a > b) std::swap(a, b);
        const ContractionTarget target =
            optimal_contraction_target(quadrics_[a], quadrics_[b], positions_[a], positions_[b]);
        double cost = target.base_cost;
        if (weighted_) {
            const double mean = 0.5 * (curvature_.values[a] + curvature_.values[b]);
            cost *= mean < 0.0 ? config_.k_neg : config_.k_pos;
        }
        heap_.push({cost, a, b, versions_[a], versions_[b], target.position,
                    target.base_cost});
    }

    void rebuild_heap() {
        heap_ = {};
        std::set<std::pair<int, int>> edges;
        for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
            if (!tri_alive_[t]) continue;
            const Triangle& tri = triangles_[t];
            for (int e = 0; e < 3; ++e) {
                const int a = tri[e], b = tri[(e + 1) % 3];
                edges.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
            }
        }
        for (const auto& [a, b] : edges) push_candidate(a, b);
    }

    void refresh_curvature() {
        std::vector<Triangle> active;
        active.reserve(alive_triangles_);
        for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
            if (tri_alive_[t]) active.push_back(triangles_[t]);
        }
        std::vector<Vec3> normals(positions_.size(), Vec3::Zero());
        for (const Triangle& tri : active) {
            const Vec3 weighted = (positions_[tri[1]] - positions_[tri[0]])
                                      .cross(positions_[tri[2]] - positions_[tri[0]]);
            for (int idx : tri) normals[idx] += weighted;
        }
        for (Vec3& n : normals) {
            const double len = n.norm();
            n = len > 0.0 ? Vec3(n / len) : Vec3(0, 0, 1);
        }
        curvature_ = mean_curvature(positions_, active, normals);
    }

    TriangleMesh extract_mesh() {
        TriangleMesh out;
        std::vector<int> remap(positions_.size(), -1);
        for (int v = 0; v < static_cast<int>(positions_.size()); ++v) {
            if (!vert_alive_[v]) continue;
            remap[v] = out.vertex_count();
            out.vertices.push_back(positions_[v]);
            if (!labels_.empty()) out.vertex_labels.push_back(labels_[v]);
        }
        for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
            if (!tri_alive_[t]) continue;
            const Triangle& tri = triangles_[t];
            out.triangles.push_back({remap[tri[0]], remap[tri[1]], remap[tri[2]]});
        }
        return compute_vertex_normals(out);
    }

    SimplifyConfig config_;
    bool weighted_;
    SimplifyTrace* trace_;

    std::vector<Vec3> positions_;
    std::vector<int> labels_;
    std::vector<Triangle> triangles_;
    std::vector<Quadric> quadrics_;
    std::vector<char> tri_alive_;
    std::vector<char> vert_alive_;
    std::vector<uint32_t> versions_;
    std::vector<std::vector<int>> incident_;
    CurvatureField curvature_;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap_;
    int alive_vertices_ = 0;
    int alive_triangles_ = 0;
    int refresh_interval_ = 1;
    int epoch_ = 0;
};

void check_simplify_preconditions(const TriangleMesh& mesh, const SimplifyConfig& config) {
    if (config.allow_nonedge_pairs) {
        throw ConfigError("allow_nonedge_pairs is reserved; edge pairs only");
    }
    if (config.k_pos <= 0.0 || config.k_neg < config.k_pos) {
        throw ConfigError("weights must satisfy k_neg >= k_pos > 0");
    }
    const int current = config.target_kind == SimplifyTargetKind::Triangles
                            ? mesh.triangle_count()
                            : mesh.vertex_count();
    if (config.target_vertex_count >= current &&
        config.target_vertex_count != current) {
        throw ConfigError("target exceeds input size");
    }
    if (config.target_vertex_count < 3) throw ConfigError("target too small");
}

}  // namespace

TriangleMesh qem_simplify(const TriangleMesh& mesh, int target, SimplifyTrace* trace) {
    SimplifyConfig config;
    config.target_vertex_count = target;
    config.k_neg = 1.0;
    config.k_pos = 1.0;
    check_simplify_preconditions(mesh, config);
    if (target == mesh.vertex_count()) return mesh;
    return CollapseEngine(mesh, config, /*weighted=*/false, trace).run();
}

TriangleMesh selective_downsample(const TriangleMesh& mesh, const SimplifyConfig& config,
                                  SimplifyTrace* trace) {
    check_simplify_preconditions(mesh, config);
    const int current = config.target_kind == SimplifyTargetKind::Triangles
                            ? mesh.triangle_count()
                            : mesh.vertex_count();
    if (config.target_vertex_count == current) return mesh;
    return CollapseEngine(mesh, config, /*weighted=*/true, trace).run();
}

}  // namespace dentkit
