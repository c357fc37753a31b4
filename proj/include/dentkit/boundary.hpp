#pragma once

#include "dentkit/mesh.hpp"

#include <vector>

namespace dentkit {

// Points whose k-neighborhood straddles a label interface.
struct BoundarySet {
    std::vector<int> indices;  // sorted ascending
    int k_used = 8;

    bool contains(int idx) const;
};

struct DensityReport {
    double avg_distance = 0.0;  // mean over boundary points of the mean
                                // distance to their m nearest boundary points
    int m = 4;
    int boundary_count = 0;
};

// A point is a boundary point when strictly more than floor(k/2) of its k
// nearest neighbors (Euclidean, self excluded, distance-then-index ties)
// carry a different label. Exact kNN. Throws MissingLabels when the cloud
// has no labels.
BoundarySet detect_boundary_points(const LabeledPointCloud& cloud, int k = 8);

// Mean over boundary points of the average distance to their m nearest
// other boundary points; lower means denser. Throws TooFewBoundaryPoints
// unless boundary_count > m.
DensityReport boundary_density(const LabeledPointCloud& cloud, const BoundarySet& boundary,
                               int m = 4);

// IoU between the boundary sets induced by two labelings of the same cloud;
// 1.0 when both sets are empty.
double boundary_iou(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels,
                    const LabeledPointCloud& cloud, int k = 8);

}  // namespace dentkit
