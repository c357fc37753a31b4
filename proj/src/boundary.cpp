#include "dentkit/boundary.hpp"

#include "dentkit/errors.hpp"
#include "dentkit/knn.hpp"

#include <algorithm>

namespace dentkit {

bool BoundarySet::contains(int idx) const {
    return std::binary_search(indices.begin(), indices.end(), idx);
}

BoundarySet detect_boundary_points(const LabeledPointCloud& cloud, int k) {
    if (!cloud.has_labels()) throw MissingLabels("boundary detection needs labels");
    const int n = cloud.count();
    if (n <= k) throw Error("need more than k points");

    KdTree tree(cloud.points);
    BoundarySet result;
    result.k_used = k;
    const int threshold = k / 2;  // boundary iff differing neighbors > floor(k/2)
    for (int i = 0; i < n; ++i) {
        const std::vector<int> knn = tree.nearest(cloud.points[i], k, i);
        int differing = 0;
        for (int j : knn) {
            if (cloud.labels[j] != cloud.labels[i]) ++differing;
        }
        if (differing > threshold) result.indices.push_back(i);
    }
    return result;
}

DensityReport boundary_density(const LabeledPointCloud& cloud, const BoundarySet& boundary,
                               int m) {
    const int count = static_cast<int>(boundary.indices.size());
    if (count <= m) {
        throw TooFewBoundaryPoints(std::to_string(count) + " boundary points, need > " +
                                   std::to_string(m));
    }

    std::vector<Vec3> boundary_points;
    boundary_points.reserve(count);
    for (int idx : boundary.indices) boundary_points.push_back(cloud.points[idx]);

    KdTree tree(boundary_points);
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        const std::vector<int> knn = tree.nearest(boundary_points[i], m, i);
        double sum = 0.0;
        for (int j : knn) sum += (boundary_points[j] - boundary_points[i]).norm();
        total += sum / static_cast<double>(m);
    }

    DensityReport report;
    report.avg_distance = total / static_cast<double>(count);
    report.m = m;
    report.boundary_count = count;
    return report;
}

double boundary_iou(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels,
                    const LabeledPointCloud& cloud, int k) {
    const size_t n = cloud.points.size();
    if (pred_labels.size() != n || gt_labels.size() != n) {
        throw LengthMismatch("label arrays must match the cloud size");
    }

    LabeledPointCloud pred_cloud = cloud;
    pred_cloud.labels = pred_labels;
    LabeledPointCloud gt_cloud = cloud;
    gt_cloud.labels = gt_labels;

    const BoundarySet pred = detect_boundary_points(pred_cloud, k);
    const BoundarySet gt = detect_boundary_points(gt_cloud, k);

    std::vector<int> intersection, set_union;
    std::set_intersection(pred.indices.begin(), pred.indices.end(), gt.indices.begin(),
                          gt.indices.end(), std::back_inserter(intersection));
    std::set_union(pred.indices.begin(), pred.indices.end(), gt.indices.begin(),
                   gt.indices.end(), std::back_inserter(set_union));
    if (set_union.empty()) return 1.0;
    return static_cast<double>(intersection.size()) / static_cast<double>(set_union.size());
}

}  // namespace dentkit
