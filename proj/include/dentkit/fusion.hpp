#pragma once

#include "dentkit/mesh.hpp"
#include "dentkit/render.hpp"

#include <string>
#include <vector>

namespace dentkit {

// Per-pixel class scores for one view, C = kNumClasses channels,
// channel-major per pixel: scores[(y*width + x)*C + c].
struct PixelScoreMap {
    int width = 0, height = 0;
    std::vector<float> scores;

    size_t offset(int x, int y) const {
        return (static_cast<size_t>(y) * width + x) * kNumClasses;
    }
};

struct ViewScores {
    const RenderedView* view = nullptr;
    const PixelScoreMap* scores = nullptr;
};

// Mean of the class-score vectors sampled at each point's visible pixels
// across views; never-visible points hold the zero vector.
struct GatheredScores {
    std::vector<std::array<float, kNumClasses>> mean_scores;
    std::vector<int> visibility_count;
};

// Point features concatenated with the one-hot encoded fused class:
// (x,y,z,nx,ny,nz | 17 one-hot), float32 row-major.
struct FusedPointFeatures {
    int count = 0;
    int width = 0;
    std::vector<float> data;
    std::vector<int> visibility_count;

    static constexpr int kGeometryDims = 6;
};

// Synthesizes the per-pixel score map a perfect image segmenter would emit:
// the one-hot of the label of each pixel's nearest vertex (zeros where the
// view shows background). Used for self-consistency runs and tests.
PixelScoreMap oracle_scores_from_labels(const RenderedView& view,
                                        const std::vector<int>& vertex_labels);

// softmax_first applies a per-pixel softmax before averaging (off by
// default: raw scores are averaged).
GatheredScores gather_pixel_scores(const LabeledPointCloud& cloud,
                                   const std::vector<ViewScores>& views,
                                   double depth_epsilon = 0.0, bool softmax_first = false);

// One-hot at the argmax class, ties to the lowest class index; all-zero
// input rows stay all-zero.
std::vector<std::array<float, kNumClasses>> one_hot_encode(
    const std::vector<std::array<float, kNumClasses>>& mean_scores);

FusedPointFeatures concat_features(const LabeledPointCloud& cloud,
                                   const std::vector<std::array<float, kNumClasses>>& one_hots,
                                   const std::vector<int>& visibility_count);

// Non-learned segmentation head: argmax of the averaged scores;
// never-visible points copy the label of the nearest visible point.
std::vector<int> majority_vote_segment(const LabeledPointCloud& cloud,
                                       const std::vector<ViewScores>& views,
                                       double depth_epsilon = 0.0);

// Single-file binary serialization: magic, JSON header (n, width, dtype,
// field layout), float32 data.
void save_fused_features(const FusedPointFeatures& features, const std::string& path);
FusedPointFeatures load_fused_features(const std::string& path);

void save_score_map(const PixelScoreMap& map, const std::string& path);
PixelScoreMap load_score_map(const std::string& path);

}  // namespace dentkit
