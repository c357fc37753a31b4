#include "dentkit/metrics.hpp"

#include "dentkit/errors.hpp"
#include "dentkit/knn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dentkit {

namespace {
constexpr double kLogClamp = 1e-12;
}

double cross_entropy(const std::vector<std::array<double, kNumClasses>>& pred,
                     const std::vector<int>& truth, Reduction reduction) {
    if (pred.size() != truth.size()) throw LengthMismatch("pred and truth sizes differ");
    if (pred.empty()) return 0.0;

    double total = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const int cls = truth[i];
        if (cls < 0 || cls >= kNumClasses) {
            throw InvalidClass("truth label " + std::to_string(cls));
        }
        const double p = std::clamp(pred[i][cls], kLogClamp, 1.0);
        total -= std::log(p);
    }
    return reduction == Reduction::Mean ? total / static_cast<double>(pred.size()) : total;
}

double cbl_loss(const std::vector<Vec3>& points, const std::vector<int>& labels,
                const std::vector<std::vector<double>>& features, double radius) {
    const size_t n = points.size();
    if (labels.size() != n || features.size() != n) {
        throw LengthMismatch("points, labels and features must align");
    }
    if (n == 0) return 0.0;
    if (radius <= 0.0) throw Error("cbl radius must be positive");

    auto feature_distance = [&](size_t a, size_t b) {
        const std::vector<double>& fa = features[a];
        const std::vector<double>& fb = features[b];
        double sum = 0.0;
        for (size_t d = 0; d < fa.size(); ++d) {
            const double diff = fa[d] - fb[d];
            sum += diff * diff;
        }
        return std::sqrt(sum);
    };

    KdTree tree(points);
    double total = 0.0;
    for (size_t x = 0; x < n; ++x) {
        const std::vector<int> neighborhood =
            tree.radius_search(points[x], radius, static_cast<int>(x));
        if (neighborhood.empty()) continue;  // contributes 0
        double numerator = 0.0;
        double denominator = 0.0;
        for (int y : neighborhood) {
            const double w = std::exp(-feature_distance(x, static_cast<size_t>(y)));
            denominator += w;
            if (labels[y] == labels[x]) numerator += w;
        }
        const double ratio = std::clamp(numerator / denominator, kLogClamp, 1.0);
        total -= std::log(ratio);
    }
    return total / static_cast<double>(n);
}

std::optional<double> per_class_iou(const std::vector<int>& pred_labels,
                                    const std::vector<int>& gt_labels, int cls) {
    if (pred_labels.size() != gt_labels.size()) {
        throw LengthMismatch("pred and gt label sizes differ");
    }
    size_t intersection = 0, set_union = 0;
    for (size_t i = 0; i < pred_labels.size(); ++i) {
        const bool in_pred = pred_labels[i] == cls;
        const bool in_gt = gt_labels[i] == cls;
        if (in_pred && in_gt) ++intersection;
        if (in_pred || in_gt) ++set_union;
    }
    if (set_union == 0) return std::nullopt;
    return static_cast<double>(intersection) / static_cast<double>(set_union);
}

double miou(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels) {
    if (pred_labels.size() != gt_labels.size()) {
        throw LengthMismatch("pred and gt label sizes differ");
    }
    std::set<int> present(pred_labels.begin(), pred_labels.end());
    present.insert(gt_labels.begin(), gt_labels.end());

    double total = 0.0;
    int defined = 0;
    for (int cls : present) {
        const std::optional<double> iou = per_class_iou(pred_labels, gt_labels, cls);
        if (iou) {
            total += *iou;
            ++defined;
        }
    }
    return defined > 0 ? total / defined : 0.0;
}

LossValue total_loss(double ce_image, double ce_point, double cbl_point) {
    if (ce_image < 0.0 || ce_point < 0.0 || cbl_point < 0.0) {
        throw Error("loss components must be nonnegative");
    }
    LossValue value;
    value.ce = ce_image + ce_point;
    value.cbl = cbl_point;
    value.total = value.ce + value.cbl;
    return value;
}

}  // namespace dentkit
