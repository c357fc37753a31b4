#include "dentkit/cli.hpp"

#include "dentkit/augment.hpp"
#include "dentkit/boundary.hpp"
#include "dentkit/curvature.hpp"
#include "dentkit/errors.hpp"
#include "dentkit/fusion.hpp"
#include "dentkit/image_io.hpp"
#include "dentkit/mesh_io.hpp"
#include "dentkit/metrics.hpp"
#include "dentkit/render.hpp"
#include "dentkit/simplify.hpp"
#include "dentkit/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace dentkit {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Validation problems map to exit code 2; everything else that throws a
// toolkit Error during processing maps to exit code 1.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

void emit_error_line(const std::string& type, const std::string& message) {
    json line;
    line["error"] = type;
    line["message"] = message;
    std::cerr << line.dump() << std::endl;
}

class StageTimer {
public:
    explicit StageTimer(std::string name)
        : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        const double seconds =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        // Timing goes to stderr so artifacts stay byte-identical across runs.
        fprintf(stderr, "[dentkit] %s: %.2fs\n", name_.c_str(), seconds);
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

// Writes through a .partial name and renames on success, so an interrupted
// run leaves no artifact that looks complete.
class ArtifactWriter {
public:
    std::string begin(const std::string& path) { return path + ".partial"; }

    void commit(const std::string& path) {
        fs::rename(path + ".partial", path);
        written_.push_back(path);
    }

    void write_text(const std::string& path, const std::string& text) {
        const std::string tmp = begin(path);
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IOError("cannot write " + tmp);
        out << text;
        out.close();
        if (!out) throw IOError("write failed for " + tmp);
        commit(path);
    }

    void write_json(const std::string& path, const json& doc) {
        write_text(path, doc.dump(2) + "\n");
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    std::vector<std::string> written_;
};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot hash " + path);

    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buffer[1 << 16];
    while (in) {
        in.read(buffer, sizeof(buffer));
        EVP_DigestUpdate(ctx, buffer, static_cast<size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

TriangleMesh load_any_mesh(const std::string& path, int* dropped = nullptr) {
    if (!fs::exists(path)) throw UsageError("input path does not exist: " + path);
    return load_mesh(path, format_from_path(path), dropped);
}

void require_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::string view_stem(int index) {
    char buf[32];
    snprintf(buf, sizeof(buf), "view_%03d", index);
    return buf;
}

// Runs fn(i) for i in [0, count) over `threads` workers; each index writes
// only its own outputs, so results do not depend on the thread count.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr error;
    for (int t = 0; t < std::min(threads, count); ++t) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

json density_json(const DensityReport& report) {
    return json{{"avg_distance", report.avg_distance},
                {"m", report.m},
                {"boundary_count", report.boundary_count},
                {"units", "normalized"}};
}

// Boundary density of a labeled mesh in normalized units under a fixed
// transform (so before/after numbers are comparable).
std::optional<DensityReport> mesh_boundary_density(const TriangleMesh& mesh,
                                                   const NormalizeTransform& transform,
                                                   int k, int m) {
    if (!mesh.has_labels()) return std::nullopt;
    TriangleMesh copy = mesh;
    for (Vec3& p : copy.vertices) p = transform.apply(p);
    const LabeledPointCloud cloud = mesh_to_pointcloud(copy);
    if (cloud.count() <= k) return std::nullopt;
    const BoundarySet boundary = detect_boundary_points(cloud, k);
    if (static_cast<int>(boundary.indices.size()) <= m) return std::nullopt;
    return boundary_density(cloud, boundary, m);
}

std::vector<int> load_labels_file(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("labels path does not exist: " + path);
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".ply" || ext == ".obj") {
        const TriangleMesh mesh = load_any_mesh(path);
        if (!mesh.has_labels()) throw UsageError("mesh has no labels: " + path);
        return mesh.vertex_labels;
    }
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("labels")) doc = doc["labels"];
    if (!doc.is_array()) throw ParseError(path + ": expected a label array");
    return doc.get<std::vector<int>>();
}

json iou_report(const std::vector<int>& pred, const std::vector<int>& gt,
                const LabeledPointCloud& cloud, int k) {
    json report;
    report["miou"] = miou(pred, gt);
    report["boundary_iou"] = boundary_iou(pred, gt, cloud, k);
    auto class_key = [](int cls) {
        return cls == 0 ? std::string("iou_background") : "iou_T" + std::to_string(cls);
    };
    for (int cls = 0; cls < kNumClasses; ++cls) {
        const std::optional<double> iou = per_class_iou(pred, gt, cls);
        if (iou) {
            report[class_key(cls)] = *iou;
        } else {
            report[class_key(cls)] = nullptr;
        }
    }
    return report;
}

// --- subcommand configs --------------------------------------------------

struct DemoArgs {
    std::string output;
    CrownSlabParams params;
};

struct SimplifyArgs {
    std::string input, output, stats_path;
    std::string method = "selective";
    int target = 16000;
    std::string target_kind = "vertices";
    double k_neg = 10.0;
    double k_pos = 1.0;
    int refresh_interval = 0;
    bool k_neg_set = false, k_pos_set = false, refresh_set = false;
};

struct RenderArgs {
    std::string input, outdir;
    int views = 96;
    int n_lat = 6, n_lon = 16;
    double fov_deg = 40.0;
    int resolution = 1024;
    double light_intensity = 2.0;
    double radius_scale = 2.0;
    bool align = false;
    int threads = 1;
};

struct PipelineSettings {
    std::string input;
    std::string output_dir;
    uint64_t seed = 0;
    // simplify
    std::string method = "selective";
    int target = 16000;
    double k_neg = 10.0, k_pos = 1.0;
    int refresh_interval = 0;
    // render
    int n_lat = 6, n_lon = 16;
    double fov_deg = 40.0;
    int resolution = 1024;
    double light_intensity = 2.0;
    double radius_scale = 2.0;
    // fuse
    bool oracle_scores = true;
    std::string scores_dir;
    bool softmax_first = false;
    // evaluate
    int knn = 8;
    int density_m = 4;
};

void reject_unknown_keys(const json& section, const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : section.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw UsageError("unknown key '" + key + "' in " + where);
        }
    }
}

PipelineSettings parse_pipeline_config(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("config path does not exist: " + path);
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw UsageError(std::string("config parse: ") + e.what());
    }

    reject_unknown_keys(doc, {"input", "output_dir", "seed", "simplify", "render", "fuse",
                              "evaluate"},
                        "config root");
    PipelineSettings s;
    try {
        s.input = doc.at("input");
        s.output_dir = doc.at("output_dir");
        s.seed = doc.value("seed", 0ULL);
        if (doc.contains("simplify")) {
            const json& sec = doc["simplify"];
            reject_unknown_keys(sec, {"method", "target", "k_neg", "k_pos", "refresh_interval"},
                                "simplify");
            s.method = sec.value("method", s.method);
            s.target = sec.value("target", s.target);
            s.k_neg = sec.value("k_neg", s.k_neg);
            s.k_pos = sec.value("k_pos", s.k_pos);
            s.refresh_interval = sec.value("refresh_interval", s.refresh_interval);
        }
        if (doc.contains("render")) {
            const json& sec = doc["render"];
            reject_unknown_keys(sec,
                                {"n_lat", "n_lon", "fov_deg", "resolution", "light_intensity",
                                 "radius_scale"},
                                "render");
            s.n_lat = sec.value("n_lat", s.n_lat);
            s.n_lon = sec.value("n_lon", s.n_lon);
            s.fov_deg = sec.value("fov_deg", s.fov_deg);
            s.resolution = sec.value("resolution", s.resolution);
            s.light_intensity = sec.value("light_intensity", s.light_intensity);
            s.radius_scale = sec.value("radius_scale", s.radius_scale);
        }
        if (doc.contains("fuse")) {
            const json& sec = doc["fuse"];
            reject_unknown_keys(sec, {"oracle_scores", "scores_dir", "softmax_first"}, "fuse");
            s.oracle_scores = sec.value("oracle_scores", s.oracle_scores);
            s.scores_dir = sec.value("scores_dir", s.scores_dir);
            s.softmax_first = sec.value("softmax_first", s.softmax_first);
        }
        if (doc.contains("evaluate")) {
            const json& sec = doc["evaluate"];
            reject_unknown_keys(sec, {"knn", "density_m"}, "evaluate");
            s.knn = sec.value("knn", s.knn);
            s.density_m = sec.value("density_m", s.density_m);
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (s.method != "selective" && s.method != "qem") {
        throw UsageError("simplify.method must be 'selective' or 'qem'");
    }
    return s;
}

// --- subcommand implementations -------------------------------------------

int cmd_demo(const DemoArgs& args) {
    StageTimer timer("demo");
    require_parent_dir(args.output);
    const TriangleMesh mesh = compute_vertex_normals(make_crown_slab(args.params));
    ArtifactWriter writer;
    save_mesh(mesh, writer.begin(args.output), format_from_path(args.output));
    writer.commit(args.output);
    std::cout << "wrote " << args.output << " (" << mesh.vertex_count() << " vertices, "
              << mesh.triangle_count() << " triangles)\n";
    return 0;
}

int cmd_simplify(const SimplifyArgs& args) {
    if (args.method != "qem" && args.method != "selective") {
        throw UsageError("--method must be 'qem' or 'selective'");
    }
    if (args.method == "qem" && (args.k_neg_set || args.k_pos_set || args.refresh_set)) {
        throw UsageError("--k-neg/--k-pos/--refresh-interval require --method selective");
    }

    const TriangleMesh input = load_any_mesh(args.input);
    SimplifyConfig config;
    config.target_vertex_count = args.target;
    config.target_kind = args.target_kind == "triangles" ? SimplifyTargetKind::Triangles
                                                         : SimplifyTargetKind::Vertices;
    config.k_neg = args.k_neg;
    config.k_pos = args.k_pos;
    config.curvature_refresh_interval = args.refresh_interval;

    NormalizeTransform transform;
    if (!input.vertices.empty()) {
        transform = normalize_coordinates(input).second;
    }

    TriangleMesh output;
    {
        StageTimer timer("simplify");
        output = args.method == "qem" ? qem_simplify(input, args.target)
                                      : selective_downsample(input, config);
    }

    ArtifactWriter writer;
    require_parent_dir(args.output);
    save_mesh(output, writer.begin(args.output), format_from_path(args.output));
    writer.commit(args.output);

    json stats;
    stats["method"] = args.method;
    stats["target"] = args.target;
    stats["target_kind"] = args.target_kind;
    stats["input_vertices"] = input.vertex_count();
    stats["input_triangles"] = input.triangle_count();
    stats["output_vertices"] = output.vertex_count();
    stats["output_triangles"] = output.triangle_count();
    if (args.method == "selective") {
        stats["k_neg"] = config.k_neg;
        stats["k_pos"] = config.k_pos;
        stats["refresh_interval"] = config.curvature_refresh_interval;
    }
    const auto before = mesh_boundary_density(input, transform, 8, 4);
    const auto after = mesh_boundary_density(output, transform, 8, 4);
    stats["boundary_avg_distance_before"] = before ? json(before->avg_distance) : json(nullptr);
    stats["boundary_avg_distance_after"] = after ? json(after->avg_distance) : json(nullptr);
    stats["boundary_count_before"] = before ? json(before->boundary_count) : json(nullptr);
    stats["boundary_count_after"] = after ? json(after->boundary_count) : json(nullptr);
    stats["boundary_units"] = "normalized";

    const std::string stats_path =
        args.stats_path.empty() ? args.output + ".stats.json" : args.stats_path;
    writer.write_json(stats_path, stats);
    return 0;
}

int cmd_curvature(const std::string& input, const std::string& output,
                  const std::string& stats_path) {
    StageTimer timer("curvature");
    TriangleMesh mesh = load_any_mesh(input);
    if (!mesh.has_normals()) mesh = compute_vertex_normals(mesh);
    const CurvatureField field = mean_curvature(mesh);

    ArtifactWriter writer;
    require_parent_dir(output);
    export_curvature_colormap(mesh, field, writer.begin(output));
    writer.commit(output);

    if (!stats_path.empty()) {
        std::vector<double> sorted = field.values;
        std::sort(sorted.begin(), sorted.end());
        json stats;
        stats["vertices"] = mesh.vertex_count();
        stats["fallback_vertices"] = field.fallback_vertices.size();
        if (!sorted.empty()) {
            stats["min"] = sorted.front();
            stats["max"] = sorted.back();
            stats["median"] = sorted[sorted.size() / 2];
        }
        writer.write_json(stats_path, stats);
    }
    return 0;
}

int cmd_boundary(const std::string& input, const std::string& report_path,
                 const std::string& marked_path, int k, int m) {
    StageTimer timer("boundary");
    const TriangleMesh mesh = load_any_mesh(input);
    if (!mesh.has_labels()) throw UsageError("boundary detection needs a labeled mesh");

    // Reported distances are in normalized units.
    const auto [normalized, transform] = normalize_coordinates(mesh);
    const LabeledPointCloud cloud = mesh_to_pointcloud(normalized);
    const BoundarySet boundary = detect_boundary_points(cloud, k);
    const DensityReport density = boundary_density(cloud, boundary, m);

    ArtifactWriter writer;
    json report = density_json(density);
    report["k"] = k;
    require_parent_dir(report_path);
    writer.write_json(report_path, report);

    if (!marked_path.empty()) {
        std::vector<std::array<unsigned char, 3>> colors(mesh.vertices.size(),
                                                         {200, 200, 200});
        for (int idx : boundary.indices) colors[idx] = {255, 0, 0};
        require_parent_dir(marked_path);
        save_ply_with_colors(mesh, colors, writer.begin(marked_path));
        writer.commit(marked_path);
    }
    return 0;
}

void render_views_to_dir(const TriangleMesh& mesh, const CameraRig& rig,
                         const DirectionalLight& light, const std::string& outdir, int threads,
                         ArtifactWriter& writer) {
    // Views are independent; the writer commits inside each task, which is
    // safe because paths are distinct per view.
    std::mutex writer_mutex;
    parallel_for(static_cast<int>(rig.cameras.size()), threads, [&](int i) {
        const RenderedView view = rasterize_view(mesh, rig.cameras[i], light);
        const std::string stem = (fs::path(outdir) / view_stem(i)).string();
        save_png_rgb(view.rgb, view.width, view.height, stem + ".png.partial");
        save_view_geometry(view, stem + ".geom.partial");
        std::lock_guard<std::mutex> lock(writer_mutex);
        writer.commit(stem + ".png");
        writer.commit(stem + ".geom");
    });
}

int cmd_render(const RenderArgs& args) {
    if (args.n_lat <= 0 || args.n_lon <= 0) throw UsageError("invalid camera grid");
    if (args.views != args.n_lat * args.n_lon) {
        throw UsageError("--views must equal --n-lat * --n-lon");
    }

    TriangleMesh mesh = load_any_mesh(args.input);
    if (!mesh.has_normals()) mesh = compute_vertex_normals(mesh);
    fs::create_directories(args.outdir);

    ArtifactWriter writer;
    if (args.align) {
        mesh = pca_align(mesh).first;
        const std::string aligned_path = (fs::path(args.outdir) / "aligned.ply").string();
        save_mesh(mesh, writer.begin(aligned_path), MeshFormat::Ply);
        writer.commit(aligned_path);
    }

    const CameraRig rig =
        build_hemisphere_rig(mesh, args.n_lat, args.n_lon, args.fov_deg * M_PI / 180.0,
                             args.resolution, args.radius_scale);
    DirectionalLight light;
    light.intensity = args.light_intensity;

    {
        StageTimer timer("render " + std::to_string(rig.cameras.size()) + " views");
        render_views_to_dir(mesh, rig, light, args.outdir, args.threads, writer);
    }
    const std::string rig_path = (fs::path(args.outdir) / "rig.json").string();
    save_rig_json(rig, writer.begin(rig_path));
    writer.commit(rig_path);
    return 0;
}

std::vector<RenderedView> load_views_from_dir(const std::string& dir) {
    std::vector<RenderedView> views;
    for (int i = 0;; ++i) {
        const std::string path = (fs::path(dir) / (view_stem(i) + ".geom")).string();
        if (!fs::exists(path)) break;
        views.push_back(load_view_geometry(path));
    }
    if (views.empty()) throw UsageError("no view_*.geom files in " + dir);
    return views;
}

int cmd_project(const std::string& mesh_path, const std::string& views_dir,
                const std::string& outdir, double depth_epsilon) {
    StageTimer timer("project");
    const TriangleMesh mesh = load_any_mesh(mesh_path);
    const LabeledPointCloud cloud = mesh_to_pointcloud(mesh);
    const std::vector<RenderedView> views = load_views_from_dir(views_dir);

    const std::string dir = outdir.empty() ? views_dir : outdir;
    fs::create_directories(dir);
    ArtifactWriter writer;

    std::vector<int> visible_in_any(cloud.count(), 0);
    json per_view = json::array();
    for (size_t v = 0; v < views.size(); ++v) {
        const ProjectionResult result = project_points(cloud, views[v], depth_epsilon);
        if (result.frame_warning) {
            std::cerr << "[dentkit] warning: no point of " << mesh_path
                      << " lands inside view " << v << " (frame mismatch?)\n";
        }
        int visible = 0;
        const std::string path = (fs::path(dir) / (view_stem(static_cast<int>(v)) + ".proj")).string();
        std::ofstream out(writer.begin(path), std::ios::binary);
        if (!out) throw IOError("cannot write " + path);
        out.write("DKPROJ01", 8);
        const uint32_t n = static_cast<uint32_t>(result.points.size());
        out.write(reinterpret_cast<const char*>(&n), 4);
        for (const PointProjection& p : result.points) {
            const float rec[3] = {static_cast<float>(p.px), static_cast<float>(p.py),
                                  static_cast<float>(p.depth)};
            out.write(reinterpret_cast<const char*>(rec), 12);
            const uint8_t flag = p.visible ? 1 : 0;
            out.write(reinterpret_cast<const char*>(&flag), 1);
            if (p.visible) {
                ++visible;
                visible_in_any[p.point] = 1;
            }
        }
        out.close();
        writer.commit(path);
        per_view.push_back({{"view", v},
                            {"visible_points", visible},
                            {"depth_epsilon", result.depth_epsilon}});
    }

    const int covered = std::accumulate(visible_in_any.begin(), visible_in_any.end(), 0);
    json summary;
    summary["points"] = cloud.count();
    summary["visible_in_at_least_one_view"] = covered;
    summary["coverage"] = cloud.count() > 0
                              ? static_cast<double>(covered) / cloud.count()
                              : 0.0;
    summary["views"] = per_view;
    writer.write_json((fs::path(dir) / "projection_summary.json").string(), summary);
    return 0;
}

int cmd_fuse(const std::string& cloud_path, const std::string& views_dir,
             const std::string& scores_dir, bool oracle, bool softmax,
             const std::string& features_path, const std::string& labels_path) {
    StageTimer timer("fuse");
    const TriangleMesh mesh = load_any_mesh(cloud_path);
    const LabeledPointCloud cloud = mesh_to_pointcloud(mesh);
    const std::vector<RenderedView> views = load_views_from_dir(views_dir);

    if (oracle && !cloud.has_labels()) {
        throw UsageError("--oracle needs a labeled cloud");
    }
    if (!oracle && scores_dir.empty()) {
        throw UsageError("provide --scores DIR or --oracle");
    }

    std::vector<PixelScoreMap> maps(views.size());
    for (size_t v = 0; v < views.size(); ++v) {
        if (oracle) {
            maps[v] = oracle_scores_from_labels(views[v], cloud.labels);
        } else {
            const std::string path =
                (fs::path(scores_dir) / (view_stem(static_cast<int>(v)) + ".scores")).string();
            if (!fs::exists(path)) throw UsageError("missing score map " + path);
            maps[v] = load_score_map(path);
        }
    }
    std::vector<ViewScores> view_scores(views.size());
    for (size_t v = 0; v < views.size(); ++v) view_scores[v] = {&views[v], &maps[v]};

    const GatheredScores gathered = gather_pixel_scores(cloud, view_scores, 0.0, softmax);
    const auto one_hots = one_hot_encode(gathered.mean_scores);
    const FusedPointFeatures features =
        concat_features(cloud, one_hots, gathered.visibility_count);
    const std::vector<int> predicted = majority_vote_segment(cloud, view_scores, 0.0);

    ArtifactWriter writer;
    if (!features_path.empty()) {
        require_parent_dir(features_path);
        save_fused_features(features, writer.begin(features_path));
        writer.commit(features_path);
    }
    if (!labels_path.empty()) {
        json doc;
        doc["labels"] = predicted;
        require_parent_dir(labels_path);
        writer.write_json(labels_path, doc);
    }
    return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gt_path,
                 const std::string& cloud_path, int k, const std::string& report_path) {
    StageTimer timer("evaluate");
    const std::vector<int> pred = load_labels_file(pred_path);
    const std::vector<int> gt = load_labels_file(gt_path);
    const TriangleMesh mesh = load_any_mesh(cloud_path);
    const LabeledPointCloud cloud = mesh_to_pointcloud(mesh);
    if (pred.size() != gt.size() || static_cast<int>(pred.size()) != cloud.count()) {
        throw UsageError("label arrays and cloud must have the same length");
    }

    const json report = iou_report(pred, gt, cloud, k);
    ArtifactWriter writer;
    if (!report_path.empty()) {
        require_parent_dir(report_path);
        writer.write_json(report_path, report);
    }
    std::cout << report.dump(2) << '\n';
    return 0;
}

int cmd_augment(const std::string& input, const std::string& output, uint64_t seed,
                double translation_range, double rotation_sigma, const std::string& unit,
                const std::string& axes, bool no_translate, bool no_rotate) {
    StageTimer timer("augment");
    const TriangleMesh mesh = load_any_mesh(input);
    LabeledPointCloud cloud = mesh_to_pointcloud(mesh);

    AugmentConfig config;
    config.seed = seed;
    config.translation_range = translation_range;
    config.rotation_sigma = rotation_sigma;
    if (unit == "degrees") {
        config.rotation_unit = AngleUnit::Degrees;
    } else if (unit != "radians") {
        throw UsageError("--rotation-unit must be 'radians' or 'degrees'");
    }
    config.rotate_x = axes.find('x') != std::string::npos;
    config.rotate_y = axes.find('y') != std::string::npos;
    config.rotate_z = axes.find('z') != std::string::npos;
    if (axes.find_first_not_of("xyz") != std::string::npos) {
        throw UsageError("--axes must be a subset of 'xyz'");
    }

    AugmentRng rng(config.seed);
    json metadata;
    metadata["seed"] = config.seed;
    metadata["prng"] = "mt19937_64 + 53-bit uniform / Box-Muller";

    if (!no_translate) {
        const TranslateResult t = random_translate(cloud, config, rng);
        cloud = t.cloud;
        metadata["translation_offset"] = {t.offset.x(), t.offset.y(), t.offset.z()};
        metadata["translation_range"] = config.translation_range;
    }
    if (!no_rotate) {
        const RotateResult r = random_rotate(cloud, config, rng);
        cloud = r.cloud;
        metadata["rotation_angles_rad"] = {r.angles.x(), r.angles.y(), r.angles.z()};
        metadata["rotation_sigma"] = config.rotation_sigma;
        metadata["rotation_unit"] = unit;
        metadata["rotation_axes"] = axes;
    }

    // Points back into a mesh shell with the original triangles.
    TriangleMesh out = mesh;
    out.vertices = cloud.points;
    out.vertex_normals = cloud.normals;
    out.vertex_labels = cloud.labels;

    ArtifactWriter writer;
    require_parent_dir(output);
    save_mesh(out, writer.begin(output), format_from_path(output));
    writer.commit(output);
    writer.write_json(output + ".augment.json", metadata);
    return 0;
}

int cmd_pipeline(const std::string& config_path, int threads) {
    const PipelineSettings s = parse_pipeline_config(config_path);
    if (!fs::exists(s.input)) throw UsageError("input path does not exist: " + s.input);
    fs::create_directories(s.output_dir);
    const fs::path out(s.output_dir);
    ArtifactWriter writer;
    StageTimer total_timer("pipeline total");

    // Stage 1: load + repair + normalize + align.
    TriangleMesh mesh = load_any_mesh(s.input);
    mesh = split_nonmanifold_vertices(mesh);
    mesh = normalize_coordinates(mesh).first;
    mesh = pca_align(mesh).first;
    const std::string aligned_path = (out / "aligned.ply").string();
    save_mesh(mesh, writer.begin(aligned_path), MeshFormat::Ply);
    writer.commit(aligned_path);

    // Stage 2: simplify.
    TriangleMesh simplified;
    {
        StageTimer timer("pipeline/simplify");
        if (s.method == "qem") {
            simplified = qem_simplify(mesh, s.target);
        } else {
            SimplifyConfig config;
            config.target_vertex_count = s.target;
            config.k_neg = s.k_neg;
            config.k_pos = s.k_pos;
            config.curvature_refresh_interval = s.refresh_interval;
            simplified = selective_downsample(mesh, config);
        }
    }
    const std::string simplified_path = (out / "simplified.ply").string();
    save_mesh(simplified, writer.begin(simplified_path), MeshFormat::Ply);
    writer.commit(simplified_path);

    // Stage 3: render.
    const CameraRig rig = build_hemisphere_rig(simplified, s.n_lat, s.n_lon,
                                               s.fov_deg * M_PI / 180.0, s.resolution,
                                               s.radius_scale);
    DirectionalLight light;
    light.intensity = s.light_intensity;
    const std::string views_dir = (out / "views").string();
    fs::create_directories(views_dir);
    {
        StageTimer timer("pipeline/render");
        render_views_to_dir(simplified, rig, light, views_dir, threads, writer);
    }
    const std::string rig_path = (fs::path(views_dir) / "rig.json").string();
    save_rig_json(rig, writer.begin(rig_path));
    writer.commit(rig_path);

    // Stage 4: project + fuse + vote.
    const LabeledPointCloud cloud = mesh_to_pointcloud(simplified);
    const std::vector<RenderedView> views = load_views_from_dir(views_dir);
    std::vector<PixelScoreMap> maps(views.size());
    if (s.oracle_scores) {
        if (!cloud.has_labels()) throw UsageError("oracle fusion needs a labeled input mesh");
        for (size_t v = 0; v < views.size(); ++v) {
            maps[v] = oracle_scores_from_labels(views[v], cloud.labels);
        }
    } else {
        if (s.scores_dir.empty()) throw UsageError("fuse.scores_dir required when oracle_scores=false");
        for (size_t v = 0; v < views.size(); ++v) {
            maps[v] = load_score_map(
                (fs::path(s.scores_dir) / (view_stem(static_cast<int>(v)) + ".scores")).string());
        }
    }
    std::vector<ViewScores> view_scores(views.size());
    for (size_t v = 0; v < views.size(); ++v) view_scores[v] = {&views[v], &maps[v]};

    std::vector<int> predicted;
    {
        StageTimer timer("pipeline/fuse");
        const GatheredScores gathered =
            gather_pixel_scores(cloud, view_scores, 0.0, s.softmax_first);
        const FusedPointFeatures features = concat_features(
            cloud, one_hot_encode(gathered.mean_scores), gathered.visibility_count);
        const std::string features_path = (out / "fused_features.bin").string();
        save_fused_features(features, writer.begin(features_path));
        writer.commit(features_path);
        predicted = majority_vote_segment(cloud, view_scores, 0.0);
    }
    json labels_doc;
    labels_doc["labels"] = predicted;
    const std::string pred_path = (out / "predicted_labels.json").string();
    writer.write_json(pred_path, labels_doc);

    // Stage 5: evaluate against the labels carried through simplification.
    json report;
    {
        StageTimer timer("pipeline/evaluate");
        report = iou_report(predicted, cloud.labels, cloud, s.knn);
        const BoundarySet boundary = detect_boundary_points(cloud, s.knn);
        if (static_cast<int>(boundary.indices.size()) > s.density_m) {
            report["boundary_density"] = density_json(boundary_density(cloud, boundary, s.density_m));
        }
    }
    const std::string report_path = (out / "report.json").string();
    writer.write_json(report_path, report);

    // Manifest with content hashes, in sorted path order.
    std::vector<std::string> artifacts = writer.written();
    std::sort(artifacts.begin(), artifacts.end());
    json manifest;
    manifest["config"] = {{"path", config_path}, {"seed", s.seed}};
    manifest["artifacts"] = json::array();
    for (const std::string& path : artifacts) {
        manifest["artifacts"].push_back({{"path", fs::relative(path, out).string()},
                                         {"sha256", sha256_file(path)},
                                         {"bytes", fs::file_size(path)}});
    }
    ArtifactWriter manifest_writer;
    manifest_writer.write_json((out / "manifest.json").string(), manifest);

    std::cout << report.dump(2) << '\n';
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"Boundary-preserving geometry toolkit for labeled intraoral scan meshes"};
    app.require_subcommand(1);

    // demo
    DemoArgs demo;
    CLI::App* demo_cmd = app.add_subcommand(
        "demo", "Generate the synthetic labeled crown-on-slab mesh");
    demo_cmd->add_option("output", demo.output, "Output mesh (.ply/.obj)")->required();
    demo_cmd->add_option("--nx", demo.params.nx, "Grid vertices along x");
    demo_cmd->add_option("--ny", demo.params.ny, "Grid vertices along y");
    demo_cmd->add_option("--crowns", demo.params.crown_count, "Number of crowns");
    demo_cmd->add_option("--crown-radius", demo.params.crown_radius, "Crown radius");
    demo_cmd->add_option("--crown-height", demo.params.crown_height, "Crown height");

    // simplify
    SimplifyArgs simplify;
    CLI::App* simplify_cmd =
        app.add_subcommand("simplify", "Downsample a mesh (QEM or selective)");
    simplify_cmd->add_option("input", simplify.input, "Input mesh")->required();
    simplify_cmd->add_option("output", simplify.output, "Output mesh")->required();
    simplify_cmd->add_option("--method", simplify.method, "qem or selective")
        ->check(CLI::IsMember({"qem", "selective"}));
    simplify_cmd->add_option("--target", simplify.target, "Target count");
    simplify_cmd->add_option("--target-kind", simplify.target_kind, "vertices or triangles")
        ->check(CLI::IsMember({"vertices", "triangles"}));
    simplify_cmd->add_option("--k-neg", simplify.k_neg, "Negative-curvature weight")
        ->trigger_on_parse()
        ->each([&](const std::string&) { simplify.k_neg_set = true; });
    simplify_cmd->add_option("--k-pos", simplify.k_pos, "Positive-curvature weight")
        ->each([&](const std::string&) { simplify.k_pos_set = true; });
    simplify_cmd->add_option("--refresh-interval", simplify.refresh_interval,
                             "Collapses between curvature refreshes (0 = 10% of vertices)")
        ->each([&](const std::string&) { simplify.refresh_set = true; });
    simplify_cmd->add_option("--stats", simplify.stats_path,
                             "Stats JSON path (default <output>.stats.json)");

    // curvature
    std::string curv_in, curv_out, curv_stats;
    CLI::App* curvature_cmd =
        app.add_subcommand("curvature", "Mean curvature colormap (red = low, blue = high)");
    curvature_cmd->add_option("input", curv_in, "Input mesh")->required();
    curvature_cmd->add_option("output", curv_out, "Colored PLY output")->required();
    curvature_cmd->add_option("--stats", curv_stats, "Optional stats JSON");

    // boundary
    std::string bnd_in, bnd_report = "boundary_report.json", bnd_marked;
    int bnd_k = 8, bnd_m = 4;
    CLI::App* boundary_cmd =
        app.add_subcommand("boundary", "Detect label-boundary points and their density");
    boundary_cmd->add_option("input", bnd_in, "Labeled input mesh")->required();
    boundary_cmd->add_option("--report", bnd_report, "Report JSON path");
    boundary_cmd->add_option("--marked", bnd_marked, "Optional PLY with boundary points in red");
    boundary_cmd->add_option("--knn", bnd_k, "Neighbors for detection");
    boundary_cmd->add_option("--density-m", bnd_m, "Neighbors for the density metric");

    // render
    RenderArgs render;
    CLI::App* render_cmd = app.add_subcommand("render", "Render hemisphere views");
    render_cmd->add_option("input", render.input, "Input mesh")->required();
    render_cmd->add_option("outdir", render.outdir, "Output directory")->required();
    render_cmd->add_option("--views", render.views, "Total view count (= n-lat * n-lon)");
    render_cmd->add_option("--n-lat", render.n_lat, "Latitude rows");
    render_cmd->add_option("--n-lon", render.n_lon, "Longitude columns");
    render_cmd->add_option("--fov", render.fov_deg, "Vertical FOV in degrees");
    render_cmd->add_option("--resolution", render.resolution, "Square image size");
    render_cmd->add_option("--light-intensity", render.light_intensity, "Light intensity");
    render_cmd->add_option("--radius-scale", render.radius_scale,
                           "Camera distance in bbox diagonals");
    render_cmd->add_flag("--align", render.align, "PCA-align before rendering");
    render_cmd->add_option("--threads", render.threads, "Worker threads");

    // project
    std::string proj_mesh, proj_views, proj_out;
    double proj_eps = 0.0;
    CLI::App* project_cmd =
        app.add_subcommand("project", "Project cloud points through rendered views");
    project_cmd->add_option("--mesh", proj_mesh, "Point source mesh")->required();
    project_cmd->add_option("--views", proj_views, "Directory with view_*.geom")->required();
    project_cmd->add_option("--output", proj_out, "Output directory (default: views dir)");
    project_cmd->add_option("--depth-epsilon", proj_eps,
                            "Visibility tolerance (0 = 1e-3 x depth range)");

    // fuse
    std::string fuse_cloud, fuse_views, fuse_scores, fuse_features = "fused_features.bin",
                            fuse_labels = "predicted_labels.json";
    bool fuse_oracle = false, fuse_softmax = false;
    CLI::App* fuse_cmd =
        app.add_subcommand("fuse", "Back-project pixel scores onto points and vote");
    fuse_cmd->add_option("--cloud", fuse_cloud, "Point source mesh")->required();
    fuse_cmd->add_option("--views", fuse_views, "Directory with view_*.geom")->required();
    fuse_cmd->add_option("--scores", fuse_scores, "Directory with view_*.scores");
    fuse_cmd->add_flag("--oracle", fuse_oracle, "Synthesize score maps from cloud labels");
    fuse_cmd->add_flag("--softmax", fuse_softmax, "Softmax scores before averaging");
    fuse_cmd->add_option("--output-features", fuse_features, "Fused feature file");
    fuse_cmd->add_option("--output-labels", fuse_labels, "Predicted labels JSON");

    // evaluate
    std::string eval_pred, eval_gt, eval_cloud, eval_report;
    int eval_k = 8;
    CLI::App* evaluate_cmd =
        app.add_subcommand("evaluate", "Per-class IoU, mIoU and boundary IoU report");
    evaluate_cmd->add_option("--pred", eval_pred, "Predicted labels (json or labeled mesh)")
        ->required();
    evaluate_cmd->add_option("--gt", eval_gt, "Ground-truth labels (json or labeled mesh)")
        ->required();
    evaluate_cmd->add_option("--cloud", eval_cloud, "Cloud the labels refer to")->required();
    evaluate_cmd->add_option("--knn", eval_k, "Neighbors for boundary detection");
    evaluate_cmd->add_option("--report", eval_report, "Report JSON path");

    // augment
    std::string aug_in, aug_out, aug_unit = "radians", aug_axes = "z";
    uint64_t aug_seed = 0;
    double aug_translation = 0.1, aug_sigma = 1.0;
    bool aug_no_translate = false, aug_no_rotate = false;
    CLI::App* augment_cmd =
        app.add_subcommand("augment", "Seeded random translation and rotation");
    augment_cmd->add_option("input", aug_in, "Input mesh")->required();
    augment_cmd->add_option("output", aug_out, "Output mesh")->required();
    augment_cmd->add_option("--seed", aug_seed, "RNG seed");
    augment_cmd->add_option("--translation-range", aug_translation,
                            "Uniform range as a bbox fraction");
    augment_cmd->add_option("--rotation-sigma", aug_sigma, "Stddev of rotation angles");
    augment_cmd->add_option("--rotation-unit", aug_unit, "radians or degrees")
        ->check(CLI::IsMember({"radians", "degrees"}));
    augment_cmd->add_option("--axes", aug_axes, "Rotation axes, subset of xyz");
    augment_cmd->add_flag("--no-translate", aug_no_translate, "Skip translation");
    augment_cmd->add_flag("--no-rotate", aug_no_rotate, "Skip rotation");

    // pipeline
    std::string pipeline_config;
    int pipeline_threads = 1;
    CLI::App* pipeline_cmd = app.add_subcommand(
        "pipeline", "align -> simplify -> render -> project -> fuse -> evaluate");
    pipeline_cmd->add_option("config", pipeline_config, "Pipeline config JSON")->required();
    pipeline_cmd->add_option("--threads", pipeline_threads, "Worker threads");

    std::reverse(args.begin(), args.end());  // CLI11 vector parse order
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        emit_error_line("usage", e.what());
        return 2;
    }

    try {
        if (*demo_cmd) return cmd_demo(demo);
        if (*simplify_cmd) return cmd_simplify(simplify);
        if (*curvature_cmd) return cmd_curvature(curv_in, curv_out, curv_stats);
        if (*boundary_cmd) return cmd_boundary(bnd_in, bnd_report, bnd_marked, bnd_k, bnd_m);
        if (*render_cmd) return cmd_render(render);
        if (*project_cmd) return cmd_project(proj_mesh, proj_views, proj_out, proj_eps);
        if (*fuse_cmd) {
            return cmd_fuse(fuse_cloud, fuse_views, fuse_scores, fuse_oracle, fuse_softmax,
                            fuse_features, fuse_labels);
        }
        if (*evaluate_cmd) {
            return cmd_evaluate(eval_pred, eval_gt, eval_cloud, eval_k, eval_report);
        }
        if (*augment_cmd) {
            return cmd_augment(aug_in, aug_out, aug_seed, aug_translation, aug_sigma, aug_unit,
                               aug_axes, aug_no_translate, aug_no_rotate);
        }
        if (*pipeline_cmd) return cmd_pipeline(pipeline_config, pipeline_threads);
    } catch (const UsageError& e) {
        emit_error_line("validation", e.what());
        return 2;
    } catch (const ConfigError& e) {
        emit_error_line("validation", e.what());
        return 2;
    } catch (const LengthMismatch& e) {
        emit_error_line("validation", e.what());
        return 2;
    } catch (const InvalidGrid& e) {
        emit_error_line("validation", e.what());
        return 2;
    } catch (const Error& e) {
        emit_error_line("runtime", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error_line("runtime", e.what());
        return 1;
    }
    return 0;
}

}  // namespace dentkit
