#pragma once

#include "dentkit/geometry.hpp"

#include <vector>

namespace dentkit {

// Exact k-nearest-neighbor queries over a fixed point set. Ties are broken
// by smaller point index, so results are deterministic and independent of
// build or traversal order. Read-only after construction.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& points);

    // The k nearest points to `query`, excluding `exclude` (pass -1 to keep
    // all), sorted by (distance, index). Returns fewer than k only when the
    // set runs out of points.
    std::vector<int> nearest(const Vec3& query, int k, int exclude = -1) const;

    // All points with |p - query| <= radius, excluding `exclude`, sorted by
    // index.
    std::vector<int> radius_search(const Vec3& query, double radius, int exclude = -1) const;

    int size() const { return static_cast<int>(points_.size()); }

private:
    struct Node {
        int axis = -1;         // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range in order_
    };

    int build(int begin, int end, int depth);

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace dentkit
