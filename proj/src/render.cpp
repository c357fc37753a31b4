#include "dentkit/render.hpp"

#include "dentkit/errors.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace dentkit {

namespace {
using json = nlohmann::json;
constexpr char kGeomMagic[8] = {'D', 'K', 'G', 'E', 'O', 'M', '0', '1'};
}  // namespace

std::pair<TriangleMesh, PcaAlignment> pca_align(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw DegenerateMesh("empty mesh");

    PcaAlignment alignment;
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : mesh.vertices) mean += p;
    mean /= static_cast<double>(mesh.vertices.size());
    alignment.centroid = mean;

    Mat3 covariance = Mat3::Zero();
    for (const Vec3& p : mesh.vertices) {
        const Vec3 d = p - mean;
        covariance += d * d.transpose();
    }
    covariance /= static_cast<double>(mesh.vertices.size());

    Eigen::SelfAdjointEigenSolver<Mat3> solver(covariance);
    // Eigen reports ascending eigenvalues; we want descending variance.
    Vec3 eigenvalues = solver.eigenvalues().reverse();
    Mat3 axes;
    for (int i = 0; i < 3; ++i) axes.col(i) = solver.eigenvectors().col(2 - i);

    // Unresolved axes: eigenvalue gaps too small to order reliably.
    const double scale = std::max(eigenvalues[0], 1e-300);
    const double tol = 1e-9;
    const bool gap01 = (eigenvalues[0] - eigenvalues[1]) / scale > tol;
    const bool gap12 = (eigenvalues[1] - eigenvalues[2]) / scale > tol;
    if (!gap01 || !gap12) {
        alignment.degenerate = true;
        // Keep resolved leading axes, complete the rest from the world axes.
        int resolved = 0;
        if (gap01) resolved = 1;  // only the first axis is trustworthy
        if (gap01 && gap12) resolved = 3;
        if (!gap01 && gap12) resolved = 0;  // top pair ambiguous: restart
        Mat3 completed;
        int filled = 0;
        for (int i = 0; i < resolved && filled < 3; ++i) completed.col(filled++) = axes.col(i);
        for (int w = 0; w < 3 && filled < 3; ++w) {
            Vec3 candidate = Vec3::Unit(w);
            for (int i = 0; i < filled; ++i) {
                candidate -= candidate.dot(completed.col(i)) * completed.col(i);
            }
            if (candidate.norm() > 1e-6) completed.col(filled++) = candidate.normalized();
        }
        axes = completed;
    }

    // Z sign: mean vertex normal should come out with positive z.
    const TriangleMesh* source = &mesh;
    TriangleMesh with_normals;
    if (!mesh.has_normals()) {
        with_normals = compute_vertex_normals(mesh);
        source = &with_normals;
    }
    Vec3 mean_normal = Vec3::Zero();
    for (const Vec3& n : source->vertex_normals) mean_normal += n;
    double z_pref = mean_normal.dot(axes.col(2));
    if (z_pref == 0.0) z_pref = axes.col(2).z();  // closed surface: prefer world up
    if (z_pref < 0.0) axes.col(2) = -axes.col(2);

    // X sign: positive skewness of the x coordinate, world x as tiebreak.
    double skew = 0.0;
    for (const Vec3& p : mesh.vertices) {
        const double x = (p - mean).dot(axes.col(0));
        skew += x * x * x;
    }
    double x_pref = skew;
    if (std::abs(x_pref) < 1e-12) x_pref = axes.col(0).x();
    if (x_pref < 0.0) axes.col(0) = -axes.col(0);

    // Right-handed completion.
    axes.col(1) = axes.col(2).cross(axes.col(0));

    alignment.axes = axes;

    TriangleMesh out = *source;
    for (Vec3& p : out.vertices) p = alignment.apply(p);
    for (Vec3& n : out.vertex_normals) n = axes.transpose() * n;
    return {std::move(out), alignment};
}

CameraRig build_hemisphere_rig(const TriangleMesh& mesh, int n_lat, int n_lon, double fov_y,
                               int resolution, double radius_scale) {
    if (n_lat <= 0 || n_lon <= 0) throw InvalidGrid("n_lat and n_lon must be positive");
    if (mesh.vertices.empty()) throw DegenerateMesh("empty mesh");
    if (resolution <= 0) throw InvalidGrid("resolution must be positive");

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : mesh.vertices) centroid += p;
    centroid /= static_cast<double>(mesh.vertices.size());

    const double diagonal = bounding_box(mesh.vertices).diagonal();
    const double radius = std::max(radius_scale * diagonal, 1e-9);

    CameraRig rig;
    rig.n_lat = n_lat;
    rig.n_lon = n_lon;
    rig.radius = radius;
    rig.cameras.reserve(static_cast<size_t>(n_lat) * n_lon);
    for (int i = 1; i <= n_lat; ++i) {
        const double theta = (M_PI / 2.0) * static_cast<double>(i) / n_lat;
        for (int j = 0; j < n_lon; ++j) {
            const double phi = 2.0 * M_PI * static_cast<double>(j) / n_lon;
            Camera camera;
            camera.position = centroid + radius * Vec3(std::cos(theta) * std::cos(phi),
                                                       std::cos(theta) * std::sin(phi),
                                                       std::sin(theta));
            camera.look_at = centroid;
            camera.up = Vec3(0, 0, 1);
            camera.fov_y = fov_y;
            camera.resolution = resolution;
            camera.near_plane = std::max(radius - diagonal, radius * 1e-4);
            camera.far_plane = radius + diagonal;
            rig.cameras.push_back(camera);
        }
    }
    return rig;
}

RenderedView rasterize_view(const TriangleMesh& mesh, const Camera& camera,
                            const DirectionalLight& light) {
    if (!mesh.has_normals()) {
        return rasterize_view(compute_vertex_normals(mesh), camera, light);
    }

    RenderedView view;
    view.camera = camera;
    view.width = camera.resolution;
    view.height = camera.resolution;
    const size_t npix = static_cast<size_t>(view.width) * view.height;
    view.rgb.assign(npix * 3, 0);
    view.depth.assign(npix, std::numeric_limits<float>::infinity());
    view.vertex_id.assign(npix, -1);

    const int nv = mesh.vertex_count();
    std::vector<Vec3> cam_space(nv);
    std::vector<double> px(nv), py(nv);
    const Mat3 rot = camera.rotation();
    const double tan_half = std::tan(camera.fov_y / 2.0);
    for (int v = 0; v < nv; ++v) {
        const Vec3 c = rot * (mesh.vertices[v] - camera.position);
        cam_space[v] = c;
        if (c.z() > 0.0) {
            px[v] = (c.x() / (c.z() * tan_half) + 1.0) * 0.5 * view.width;
            py[v] = (1.0 - c.y() / (c.z() * tan_half)) * 0.5 * view.height;
        }
    }

    const Vec3 to_light = -light.direction.normalized();

    for (const Triangle& tri : mesh.triangles) {
        const int i0 = tri[0], i1 = tri[1], i2 = tri[2];
        // No near-plane clipping: cameras are built to keep the mesh inside
        // the frustum, so straddling triangles are simply skipped.
        if (cam_space[i0].z() < camera.near_plane || cam_space[i1].z() < camera.near_plane ||
            cam_space[i2].z() < camera.near_plane) {
            continue;
        }

        const double ax = px[i0], ay = py[i0];
        const double bx = px[i1], by = py[i1];
        const double cx = px[i2], cy = py[i2];

        // Pixel y grows downward, so a camera-facing CCW triangle has
        // negative signed area here.
        const double area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
        if (area2 >= 0.0) continue;  // backface or degenerate

        const int min_x = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}))));
        const int max_x = std::min(view.width - 1,
                                   static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
        const int min_y = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}))));
        const int max_y = std::min(view.height - 1,
                                   static_cast<int>(std::ceil(std::max({ay, by, cy}))));
        if (min_x > max_x || min_y > max_y) continue;

        const double inv_z0 = 1.0 / cam_space[i0].z();
        const double inv_z1 = 1.0 / cam_space[i1].z();
        const double inv_z2 = 1.0 / cam_space[i2].z();

        for (int y = min_y; y <= max_y; ++y) {
            for (int x = min_x; x <= max_x; ++x) {
                const double sx = x + 0.5, sy = y + 0.5;
                // Barycentric from edge functions, normalized by area2.
                const double w0 = ((bx - sx) * (cy - sy) - (by - sy) * (cx - sx)) / area2;
                const double w1 = ((cx - sx) * (ay - sy) - (cy - sy) * (ax - sx)) / area2;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;

                const double inv_z = w0 * inv_z0 + w1 * inv_z1 + w2 * inv_z2;
                const double z = 1.0 / inv_z;
                const size_t pix = view.pixel(x, y);
                if (z >= view.depth[pix]) continue;
                view.depth[pix] = static_cast<float>(z);

                // Perspective-correct interpolation of normal and position.
                const double q0 = w0 * inv_z0 * z;
                const double q1 = w1 * inv_z1 * z;
                const double q2 = w2 * inv_z2 * z;
                const Vec3 normal = (q0 * mesh.vertex_normals[i0] +
                                     q1 * mesh.vertex_normals[i1] +
                                     q2 * mesh.vertex_normals[i2])
                                        .normalized();
                const Vec3 surface = q0 * mesh.vertices[i0] + q1 * mesh.vertices[i1] +
                                     q2 * mesh.vertices[i2];

                const double lambert = std::max(0.0, normal.dot(to_light));
                const double shade = std::clamp(light.intensity * lambert, 0.0, 1.0);
                const uint8_t gray = static_cast<uint8_t>(std::lround(255.0 * shade));
                view.rgb[pix * 3 + 0] = gray;
                view.rgb[pix * 3 + 1] = gray;
                view.rgb[pix * 3 + 2] = gray;

                // Nearest corner in 3D; ties go to the lowest vertex index.
                int best = i0;
                double best_d = (mesh.vertices[i0] - surface).squaredNorm();
                for (int idx : {i1, i2}) {
                    const double d = (mesh.vertices[idx] - surface).squaredNorm();
                    if (d < best_d || (d == best_d && idx < best)) {
                        best = idx;
                        best_d = d;
                    }
                }
                view.vertex_id[pix] = best;
            }
        }
    }
    return view;
}

ProjectionResult project_points(const LabeledPointCloud& cloud, const RenderedView& view,
                                double depth_epsilon) {
    ProjectionResult result;
    if (depth_epsilon <= 0.0) {
        float lo = std::numeric_limits<float>::infinity();
        float hi = -std::numeric_limits<float>::infinity();
        for (float d : view.depth) {
            if (std::isfinite(d)) {
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
        }
        depth_epsilon = hi > lo ? 1e-3 * (hi - lo) : 1e-6;
    }
    result.depth_epsilon = depth_epsilon;

    result.points.reserve(cloud.points.size());
    bool any_in_viewport = false;
    for (int i = 0; i < cloud.count(); ++i) {
        const Camera::Projection proj = view.camera.project(cloud.points[i]);
        PointProjection p;
        p.point = i;
        p.px = proj.px;
        p.py = proj.py;
        p.depth = proj.depth;
        if (proj.depth > 0.0 && proj.px >= 0.0 && proj.px < view.width && proj.py >= 0.0 &&
            proj.py < view.height) {
            any_in_viewport = true;
            const int x = static_cast<int>(proj.px);
            const int y = static_cast<int>(proj.py);
            p.visible = proj.depth <= view.depth[view.pixel(x, y)] + depth_epsilon;
        }
        result.points.push_back(p);
    }
    result.frame_warning = !cloud.points.empty() && !any_in_viewport;
    return result;
}

// --- serialization -------------------------------------------------------

namespace {

void write_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& in, void* p, size_t n) {
    if (!in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n))) {
        throw ParseError("truncated geometry sidecar");
    }
}

json camera_to_json(const Camera& c) {
    return json{{"position", {c.position.x(), c.position.y(), c.position.z()}},
                {"look_at", {c.look_at.x(), c.look_at.y(), c.look_at.z()}},
                {"up", {c.up.x(), c.up.y(), c.up.z()}},
                {"fov_y_rad", c.fov_y},
                {"resolution", c.resolution},
                {"near", c.near_plane},
                {"far", c.far_plane}};
}

Camera camera_from_json(const json& j) {
    Camera c;
    auto vec = [](const json& a) { return Vec3(a.at(0), a.at(1), a.at(2)); };
    c.position = vec(j.at("position"));
    c.look_at = vec(j.at("look_at"));
    c.up = vec(j.at("up"));
    c.fov_y = j.at("fov_y_rad");
    c.resolution = j.at("resolution");
    c.near_plane = j.at("near");
    c.far_plane = j.at("far");
    return c;
}

}  // namespace

void save_view_geometry(const RenderedView& view, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);

    write_bytes(out, kGeomMagic, 8);
    const uint32_t dims[2] = {static_cast<uint32_t>(view.width),
                              static_cast<uint32_t>(view.height)};
    write_bytes(out, dims, 8);
    const Camera& c = view.camera;
    const double header[12] = {c.position.x(), c.position.y(), c.position.z(),
                               c.look_at.x(),  c.look_at.y(),  c.look_at.z(),
                               c.up.x(),       c.up.y(),       c.up.z(),
                               c.fov_y,        c.near_plane,   c.far_plane};
    write_bytes(out, header, sizeof(header));
    const int32_t resolution = c.resolution;
    write_bytes(out, &resolution, 4);
    write_bytes(out, view.depth.data(), view.depth.size() * sizeof(float));
    write_bytes(out, view.vertex_id.data(), view.vertex_id.size() * sizeof(int32_t));
    if (!out) throw IOError("write failed for " + path);
}

RenderedView load_view_geometry(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path);

    char magic[8];
    read_bytes(in, magic, 8);
    if (std::memcmp(magic, kGeomMagic, 8) != 0) throw ParseError("bad geometry magic in " + path);

    RenderedView view;
    uint32_t dims[2];
    read_bytes(in, dims, 8);
    view.width = static_cast<int>(dims[0]);
    view.height = static_cast<int>(dims[1]);
    double header[12];
    read_bytes(in, header, sizeof(header));
    view.camera.position = Vec3(header[0], header[1], header[2]);
    view.camera.look_at = Vec3(header[3], header[4], header[5]);
    view.camera.up = Vec3(header[6], header[7], header[8]);
    view.camera.fov_y = header[9];
    view.camera.near_plane = header[10];
    view.camera.far_plane = header[11];
    int32_t resolution;
    read_bytes(in, &resolution, 4);
    view.camera.resolution = resolution;

    const size_t npix = static_cast<size_t>(view.width) * view.height;
    view.depth.resize(npix);
    view.vertex_id.resize(npix);
    read_bytes(in, view.depth.data(), npix * sizeof(float));
    read_bytes(in, view.vertex_id.data(), npix * sizeof(int32_t));
    return view;
}

void save_rig_json(const CameraRig& rig, const std::string& path) {
    json doc;
    doc["n_lat"] = rig.n_lat;
    doc["n_lon"] = rig.n_lon;
    doc["radius"] = rig.radius;
    doc["cameras"] = json::array();
    for (const Camera& c : rig.cameras) doc["cameras"].push_back(camera_to_json(c));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

CameraRig load_rig_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("rig json: ") + e.what());
    }
    CameraRig rig;
    rig.n_lat = doc.value("n_lat", 0);
    rig.n_lon = doc.value("n_lon", 0);
    rig.radius = doc.value("radius", 0.0);
    for (const json& j : doc.at("cameras")) rig.cameras.push_back(camera_from_json(j));
    return rig;
}

}  // namespace dentkit
