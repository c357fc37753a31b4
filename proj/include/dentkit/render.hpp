#pragma once

#include "dentkit/camera.hpp"
#include "dentkit/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dentkit {

// Vertical downward parallel light above the crowns. Intensity above 1
// saturates upward-facing surfaces and leaves slopes graded, which is what
// makes the gum-to-crown junction stand out.
struct DirectionalLight {
    Vec3 direction = Vec3(0, 0, -1);  // unit
    double intensity = 2.0;
};

struct CameraRig {
    std::vector<Camera> cameras;
    int n_lat = 6;
    int n_lon = 16;
    double radius = 0.0;  // world units (radius_scale x bbox diagonal)
};

struct RenderedView {
    Camera camera;
    int width = 0, height = 0;
    std::vector<uint8_t> rgb;        // 3 bytes per pixel, row-major from top
    std::vector<float> depth;        // camera-space z; +inf where empty
    std::vector<int32_t> vertex_id;  // nearest mesh vertex per pixel; -1 = none

    size_t pixel(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

struct PointProjection {
    int point = -1;
    double px = 0.0, py = 0.0;
    double depth = 0.0;
    bool visible = false;
};

struct ProjectionResult {
    std::vector<PointProjection> points;
    double depth_epsilon = 0.0;  // the epsilon actually used
    bool frame_warning = false;  // no point landed in the viewport
};

struct PcaAlignment {
    Mat3 axes = Mat3::Identity();  // columns: aligned x/y/z in input coords
    Vec3 centroid = Vec3::Zero();
    bool degenerate = false;  // covariance did not resolve all axes

    Vec3 apply(const Vec3& p) const { return axes.transpose() * (p - centroid); }
    Vec3 apply_inverse(const Vec3& p) const { return axes * p + centroid; }
};

// Rotates the mesh so the principal axes of the vertex covariance map to
// x (largest variance), y, z (smallest), centered on the vertex centroid.
// The z sign follows the mean vertex normal ("occlusal up"); the x sign
// follows the third moment of the x coordinates. Near-equal eigenvalues
// leave axes unresolved; those are completed deterministically from the
// world axes by Gram-Schmidt and flagged.
std::pair<TriangleMesh, PcaAlignment> pca_align(const TriangleMesh& mesh);

// Cameras on an even latitude/longitude grid of the upper hemisphere:
// latitudes i*(90/n_lat) degrees for i=1..n_lat, longitudes j*(360/n_lon)
// for j=0..n_lon-1, at distance radius_scale x bbox diagonal from the
// vertex centroid, all aimed at the centroid. Throws InvalidGrid when
// either count is not positive.
CameraRig build_hemisphere_rig(const TriangleMesh& mesh, int n_lat = 6, int n_lon = 16,
                               double fov_y = 40.0 * M_PI / 180.0, int resolution = 1024,
                               double radius_scale = 2.0);

// Software rasterizer: perspective projection, z-buffer, backface culling,
// Lambertian shading shade = clamp(intensity * max(0, n dot -light)), and a
// per-pixel map of the nearest (3D) vertex of the covering triangle.
RenderedView rasterize_view(const TriangleMesh& mesh, const Camera& camera,
                            const DirectionalLight& light = {});

// Projects cloud points through the view's camera; a point is visible when
// it lands inside the viewport with depth <= depth_buffer + epsilon.
// depth_epsilon <= 0 selects 1e-3 x the view's depth range.
ProjectionResult project_points(const LabeledPointCloud& cloud, const RenderedView& view,
                                double depth_epsilon = 0.0);

// --- serialization -------------------------------------------------------

// Binary sidecar with the camera, depth plane (float32) and vertex-id plane
// (int32, -1 = none); little-endian, layout documented in the README.
void save_view_geometry(const RenderedView& view, const std::string& path);
RenderedView load_view_geometry(const std::string& path);  // rgb left empty

void save_rig_json(const CameraRig& rig, const std::string& path);
CameraRig load_rig_json(const std::string& path);

}  // namespace dentkit
