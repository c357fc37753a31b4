#pragma once

#include "dentkit/geometry.hpp"
#include "dentkit/mesh.hpp"

#include <optional>
#include <vector>

namespace dentkit {

enum class Reduction { Mean, Sum };

struct LossValue {
    double ce = 0.0;   // ce_image + ce_point
    double cbl = 0.0;
    double total = 0.0;
};

// Mean (or sum) over items of -log(pred[item][truth[item]]), probabilities
// clamped to [1e-12, 1]. pred rows are per-item class probabilities of
// length kNumClasses.
double cross_entropy(const std::vector<std::array<double, kNumClasses>>& pred,
                     const std::vector<int>& truth, Reduction reduction = Reduction::Mean);

// Contrastive boundary loss: per point, the negative log ratio of
// same-class to all exp(-|F_x - F_y|) weights over the neighborhood within
// `radius` (self excluded). Points with empty neighborhoods contribute 0;
// ratios are clamped at 1e-12; the result divides by the total point count.
double cbl_loss(const std::vector<Vec3>& points, const std::vector<int>& labels,
                const std::vector<std::vector<double>>& features, double radius);

// |pred=c and gt=c| / |pred=c or gt=c|; empty union -> nullopt.
std::optional<double> per_class_iou(const std::vector<int>& pred_labels,
                                    const std::vector<int>& gt_labels, int cls);

// Mean of the defined per-class IoUs over classes present in pred or gt.
double miou(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels);

// Loss composition: total = ce_image + ce_point + cbl_point.
LossValue total_loss(double ce_image, double ce_point, double cbl_point);

}  // namespace dentkit
