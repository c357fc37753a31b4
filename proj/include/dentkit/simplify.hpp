#pragma once

#include "dentkit/curvature.hpp"
#include "dentkit/mesh.hpp"

#include <vector>

namespace dentkit {

// Plane-sum error quadric: Q = sum over incident triangles of p p^T with
// p = (a,b,c,d) the unit plane equation. Symmetric positive semidefinite.
struct Quadric {
    Mat4 m = Mat4::Zero();

    void add_plane(const Vec3& unit_normal, double d) {
        Eigen::Vector4d p(unit_normal.x(), unit_normal.y(), unit_normal.z(), d);
        m += p * p.transpose();
    }

    double evaluate(const Vec3& v) const {
        Eigen::Vector4d h(v.x(), v.y(), v.z(), 1.0);
        return h.dot(m * h);
    }

    Quadric operator+(const Quadric& other) const { return Quadric{m + other.m}; }
};

struct ContractionTarget {
    Vec3 position = Vec3::Zero();
    double base_cost = 0.0;
    bool used_fallback = false;  // singular system: best of {v1, v2, midpoint}
};

enum class SimplifyTargetKind { Vertices, Triangles };

struct SimplifyConfig {
    int target_vertex_count = 16000;
    SimplifyTargetKind target_kind = SimplifyTargetKind::Vertices;
    double k_neg = 10.0;  // weight for negative mean-curvature edges
    double k_pos = 1.0;   // weight for non-negative mean-curvature edges
    // Collapses between curvature recomputations; 0 selects the default of
    // 10% of the initial vertex count.
    int curvature_refresh_interval = 0;
    bool allow_nonedge_pairs = false;  // reserved; edge pairs only
};

// Optional instrumentation for property tests.
struct SimplifyTrace {
    struct Collapse {
        int epoch;             // heap rebuilds seen before this collapse
        double weighted_cost;  // key under which the candidate was popped
        int vertex_delta;
        int triangle_delta;
    };
    std::vector<Collapse> collapses;
};

// One quadric per vertex; degenerate triangles contribute nothing.
std::vector<Quadric> compute_quadrics(const TriangleMesh& mesh);

// Minimizes v^T (Q1+Q2) v over positions with homogeneous coordinate 1.
// Falls back to the best of {v1, v2, midpoint} when the 3x3 system is
// singular (relative determinant below 1e-12).
ContractionTarget optimal_contraction_target(const Quadric& q1, const Quadric& q2,
                                             const Vec3& v1, const Vec3& v2);

// k_neg when the mean of the endpoint curvatures is negative, else k_pos.
double edge_collapse_coefficient(const CurvatureField& field, int v1, int v2,
                                 const SimplifyConfig& config);

// Garland-Heckbert greedy edge collapse to `target` vertices (uniform
// weights). Throws TargetUnreachable when topology constraints block
// further collapse.
TriangleMesh qem_simplify(const TriangleMesh& mesh, int target,
                          SimplifyTrace* trace = nullptr);

// Curvature-weighted QEM: heap keys are base_cost times the edge collapse
// coefficient, and the curvature field is recomputed on the current mesh
// every curvature_refresh_interval collapses.
TriangleMesh selective_downsample(const TriangleMesh& mesh, const SimplifyConfig& config,
                                  SimplifyTrace* trace = nullptr);

}  // namespace dentkit
