#include "dentkit/knn.hpp"

#include <algorithm>
#include <queue>

namespace dentkit {

namespace {
constexpr int kLeafSize = 8;
}

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
    order_.resize(points_.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
    Node node;
    if (end - begin <= kLeafSize) {
        node.begin = begin;
        node.end = end;
        // Sorted leaves keep tie handling order-independent.
        std::sort(order_.begin() + begin, order_.begin() + end);
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Split on the widest axis of the current range.
    Aabb box;
    for (int i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    int axis = 0;
    const Vec3 extent = box.extent();
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double va = points_[a][axis], vb = points_[b][axis];
                         return va != vb ? va < vb : a < b;
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];

    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

std::vector<int> KdTree::nearest(const Vec3& query, int k, int exclude) const {
    if (k <= 0 || root_ < 0) return {};

    using Entry = std::pair<double, int>;  // (squared distance, index)
    // Max-heap of the best k so far; worst candidate on top.
    std::priority_queue<Entry> best;

    auto consider = [&](int idx) {
        if (idx == exclude) return;
        const double d2 = (points_[idx] - query).squaredNorm();
        const Entry entry{d2, idx};
        if (static_cast<int>(best.size()) < k) {
            best.push(entry);
        } else if (entry < best.top()) {
            // std::pair ordering: smaller distance first, then smaller index,
            // which is exactly the tie rule.
            best.pop();
            best.push(entry);
        }
    };

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) consider(order_[i]);
            return;
        }
        const double delta = query[node.axis] - node.split;
        const int near_child = delta < 0.0 ? node.left : node.right;
        const int far_child = delta < 0.0 ? node.right : node.left;
        self(self, near_child);
        // The far side can still hold an equal-distance lower index, so only
        // prune on a strict bound violation.
        if (static_cast<int>(best.size()) < k || delta * delta <= best.top().first) {
            self(self, far_child);
        }
    };
    visit(visit, root_);

    std::vector<int> result(best.size());
    std::vector<double> dists(best.size());
    for (int i = static_cast<int>(best.size()) - 1; i >= 0; --i) {
        result[i] = best.top().second;
        best.pop();
    }
    return result;
}

std::vector<int> KdTree::radius_search(const Vec3& query, double radius, int exclude) const {
    std::vector<int> result;
    if (root_ < 0 || radius < 0.0) return result;
    const double r2 = radius * radius;

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[i];
                if (idx == exclude) continue;
                if ((points_[idx] - query).squaredNorm() <= r2) result.push_back(idx);
            }
            return;
        }
        const double delta = query[node.axis] - node.split;
        const int near_child = delta < 0.0 ? node.left : node.right;
        const int far_child = delta < 0.0 ? node.right : node.left;
        self(self, near_child);
        if (delta * delta <= r2) self(self, far_child);
    };
    visit(visit, root_);
    std::sort(result.begin(), result.end());
    return result;
}

}  // namespace dentkit
