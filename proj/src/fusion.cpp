#include "dentkit/fusion.hpp"

#include "dentkit/errors.hpp"
#include "dentkit/knn.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace dentkit {

namespace {
using json = nlohmann::json;
constexpr char kFuseMagic[8] = {'D', 'K', 'F', 'U', 'S', 'E', '0', '1'};
constexpr char kScoreMagic[8] = {'D', 'K', 'S', 'C', 'O', 'R', '0', '1'};
}  // namespace

PixelScoreMap oracle_scores_from_labels(const RenderedView& view,
                                        const std::vector<int>& vertex_labels) {
    PixelScoreMap map;
    map.width = view.width;
    map.height = view.height;
    map.scores.assign(static_cast<size_t>(view.width) * view.height * kNumClasses, 0.0f);
    for (size_t pix = 0; pix < view.vertex_id.size(); ++pix) {
        const int32_t id = view.vertex_id[pix];
        if (id < 0) continue;
        const int label = vertex_labels[id];
        map.scores[pix * kNumClasses + label] = 1.0f;
    }
    return map;
}

GatheredScores gather_pixel_scores(const LabeledPointCloud& cloud,
                                   const std::vector<ViewScores>& views,
                                   double depth_epsilon, bool softmax_first) {
    const int n = cloud.count();
    GatheredScores result;
    result.mean_scores.assign(n, {});
    result.visibility_count.assign(n, 0);

    std::vector<std::array<double, kNumClasses>> sums(n, {});
    for (const ViewScores& vs : views) {
        const RenderedView& view = *vs.view;
        const PixelScoreMap& scores = *vs.scores;
        if (scores.width != view.width || scores.height != view.height) {
            throw ShapeMismatch("score map resolution does not match the view");
        }
        const ProjectionResult projections = project_points(cloud, view, depth_epsilon);
        for (const PointProjection& p : projections.points) {
            if (!p.visible) continue;
            const size_t offset = scores.offset(static_cast<int>(p.px), static_cast<int>(p.py));
            double row[kNumClasses];
            for (int c = 0; c < kNumClasses; ++c) row[c] = scores.scores[offset + c];
            if (softmax_first) {
                double peak = row[0];
                for (int c = 1; c < kNumClasses; ++c) peak = std::max(peak, row[c]);
                double total = 0.0;
                for (int c = 0; c < kNumClasses; ++c) total += std::exp(row[c] - peak);
                for (int c = 0; c < kNumClasses; ++c) row[c] = std::exp(row[c] - peak) / total;
            }
            for (int c = 0; c < kNumClasses; ++c) sums[p.point][c] += row[c];
            ++result.visibility_count[p.point];
        }
    }

    for (int i = 0; i < n; ++i) {
        const int count = result.visibility_count[i];
        if (count == 0) continue;
        for (int c = 0; c < kNumClasses; ++c) {
            result.mean_scores[i][c] = static_cast<float>(sums[i][c] / count);
        }
    }
    return result;
}

std::vector<std::array<float, kNumClasses>> one_hot_encode(
    const std::vector<std::array<float, kNumClasses>>& mean_scores) {
    std::vector<std::array<float, kNumClasses>> result(mean_scores.size());
    for (size_t i = 0; i < mean_scores.size(); ++i) {
        const auto& row = mean_scores[i];
        int best = 0;
        bool all_zero = true;
        for (int c = 0; c < kNumClasses; ++c) {
            if (row[c] != 0.0f) all_zero = false;
            if (row[c] > row[best]) best = c;  // strict: ties keep lowest index
        }
        result[i] = {};
        if (!all_zero) result[i][best] = 1.0f;
    }
    return result;
}

FusedPointFeatures concat_features(const LabeledPointCloud& cloud,
                                   const std::vector<std::array<float, kNumClasses>>& one_hots,
                                   const std::vector<int>& visibility_count) {
    const int n = cloud.count();
    if (static_cast<int>(one_hots.size()) != n ||
        static_cast<int>(visibility_count.size()) != n) {
        throw LengthMismatch("one-hot rows must match the cloud size");
    }

    FusedPointFeatures features;
    features.count = n;
    features.width = FusedPointFeatures::kGeometryDims + kNumClasses;
    features.visibility_count = visibility_count;
    features.data.reserve(static_cast<size_t>(n) * features.width);
    for (int i = 0; i < n; ++i) {
        const Vec3& p = cloud.points[i];
        const Vec3& m = cloud.normals[i];
        for (double value : {p.x(), p.y(), p.z(), m.x(), m.y(), m.z()}) {
            features.data.push_back(static_cast<float>(value));
        }
        features.data.insert(features.data.end(), one_hots[i].begin(), one_hots[i].end());
    }
    return features;
}

std::vector<int> majority_vote_segment(const LabeledPointCloud& cloud,
                                       const std::vector<ViewScores>& views,
                                       double depth_epsilon) {
    const GatheredScores gathered = gather_pixel_scores(cloud, views, depth_epsilon);
    const int n = cloud.count();

    std::vector<int> labels(n, 0);
    std::vector<Vec3> visible_points;
    std::vector<int> visible_indices;
    for (int i = 0; i < n; ++i) {
        if (gathered.visibility_count[i] > 0) {
            visible_points.push_back(cloud.points[i]);
            visible_indices.push_back(i);
        }
    }
    if (visible_points.empty()) throw NoVisiblePoints("no point is visible in any view");

    for (int i = 0; i < n; ++i) {
        if (gathered.visibility_count[i] == 0) continue;
        const auto& row = gathered.mean_scores[i];
        int best = 0;
        for (int c = 1; c < kNumClasses; ++c) {
            if (row[c] > row[best]) best = c;
        }
        labels[i] = best;
    }

    // Never-visible points inherit the nearest visible point's label.
    KdTree tree(visible_points);
    for (int i = 0; i < n; ++i) {
        if (gathered.visibility_count[i] > 0) continue;
        const std::vector<int> nn = tree.nearest(cloud.points[i], 1);
        labels[i] = labels[visible_indices[nn.front()]];
    }
    return labels;
}

// --- serialization -------------------------------------------------------

void save_fused_features(const FusedPointFeatures& features, const std::string& path) {
    json header;
    header["n"] = features.count;
    header["width"] = features.width;
    header["dtype"] = "float32";
    header["fields"] = json::array({"x", "y", "z", "nx", "ny", "nz"});
    for (int c = 0; c < kNumClasses; ++c) {
        header["fields"].push_back("onehot_" + std::to_string(c));
    }
    header["visibility_count"] = features.visibility_count;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out.write(kFuseMagic, 8);
    const uint32_t header_len = static_cast<uint32_t>(header_text.size());
    out.write(reinterpret_cast<const char*>(&header_len), 4);
    out.write(header_text.data(), header_len);
    out.write(reinterpret_cast<const char*>(features.data.data()),
              static_cast<std::streamsize>(features.data.size() * sizeof(float)));
    if (!out) throw IOError("write failed for " + path);
}

FusedPointFeatures load_fused_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kFuseMagic, 8) != 0) {
        throw ParseError("bad fused-features magic in " + path);
    }
    uint32_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), 4);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw ParseError("truncated fused-features header");
    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("fused-features header: ") + e.what());
    }

    FusedPointFeatures features;
    features.count = header.at("n");
    features.width = header.at("width");
    features.visibility_count = header.at("visibility_count").get<std::vector<int>>();
    features.data.resize(static_cast<size_t>(features.count) * features.width);
    in.read(reinterpret_cast<char*>(features.data.data()),
            static_cast<std::streamsize>(features.data.size() * sizeof(float)));
    if (!in) throw ParseError("truncated fused-features data");
    return features;
}

void save_score_map(const PixelScoreMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out.write(kScoreMagic, 8);
    const uint32_t dims[3] = {static_cast<uint32_t>(map.width),
                              static_cast<uint32_t>(map.height),
                              static_cast<uint32_t>(kNumClasses)};
    out.write(reinterpret_cast<const char*>(dims), 12);
    out.write(reinterpret_cast<const char*>(map.scores.data()),
              static_cast<std::streamsize>(map.scores.size() * sizeof(float)));
    if (!out) throw IOError("write failed for " + path);
}

PixelScoreMap load_score_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kScoreMagic, 8) != 0) {
        throw ParseError("bad score-map magic in " + path);
    }
    uint32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), 12);
    if (!in) throw ParseError("truncated score map header");
    if (dims[2] != static_cast<uint32_t>(kNumClasses)) {
        throw ShapeMismatch("score map has " + std::to_string(dims[2]) + " classes");
    }
    PixelScoreMap map;
    map.width = static_cast<int>(dims[0]);
    map.height = static_cast<int>(dims[1]);
    map.scores.resize(static_cast<size_t>(map.width) * map.height * kNumClasses);
    in.read(reinterpret_cast<char*>(map.scores.data()),
            static_cast<std::streamsize>(map.scores.size() * sizeof(float)));
    if (!in) throw ParseError("truncated score map data");
    return map;
}

}  // namespace dentkit
