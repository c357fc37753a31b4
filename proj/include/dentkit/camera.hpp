#pragma once

#include "dentkit/geometry.hpp"

#include <cmath>

namespace dentkit {

// Pinhole perspective camera. Camera space is right-handed with x = right,
// y = up, z = forward; depth is the positive camera-space z of a point in
// front of the camera. Pixel (0,0) is the top-left corner; projections use
// pixel-center sampling.
struct Camera {
    Vec3 position = Vec3(0, 0, 1);
    Vec3 look_at = Vec3::Zero();
    Vec3 up = Vec3(0, 0, 1);
    double fov_y = 40.0 * M_PI / 180.0;  // vertical, radians
    int resolution = 1024;               // square images
    double near_plane = 1e-3;
    double far_plane = 1e3;

    Vec3 forward() const { return (look_at - position).normalized(); }

    // Orthonormal world->camera map (rows are right, true up, forward).
    Mat3 rotation() const {
        const Vec3 f = forward();
        Vec3 u = up;
        if (f.cross(u).norm() < 1e-9) u = Vec3(1, 0, 0);  // pole singularity
        const Vec3 right = f.cross(u).normalized();
        const Vec3 true_up = right.cross(f);
        Mat3 m;
        m.row(0) = right.transpose();
        m.row(1) = true_up.transpose();
        m.row(2) = f.transpose();
        return m;
    }

    Vec3 world_to_camera(const Vec3& p) const { return rotation() * (p - position); }
    Vec3 camera_to_world(const Vec3& c) const { return rotation().transpose() * c + position; }

    // Projects to continuous pixel coordinates; depth is camera-space z.
    // Points behind the camera get depth <= 0 and meaningless pixels.
    struct Projection {
        double px = 0.0, py = 0.0;
        double depth = 0.0;
    };

    Projection project(const Vec3& world) const {
        const Vec3 c = world_to_camera(world);
        Projection out;
        out.depth = c.z();
        if (c.z() <= 0.0) return out;
        const double tan_half = std::tan(fov_y / 2.0);
        const double ndc_x = c.x() / (c.z() * tan_half);
        const double ndc_y = c.y() / (c.z() * tan_half);
        out.px = (ndc_x + 1.0) * 0.5 * resolution;
        out.py = (1.0 - ndc_y) * 0.5 * resolution;
        return out;
    }

    Vec3 unproject(double px, double py, double depth) const {
        const double tan_half = std::tan(fov_y / 2.0);
        const double ndc_x = 2.0 * px / resolution - 1.0;
        const double ndc_y = 1.0 - 2.0 * py / resolution;
        return camera_to_world(Vec3(ndc_x * tan_half * depth, ndc_y * tan_half * depth, depth));
    }

    // Distance from `point` to the optical axis (the line through position
    // along forward); zero when the axis passes through the point.
    double axis_distance(const Vec3& point) const {
        const Vec3 d = point - position;
        const Vec3 f = forward();
        return (d - d.dot(f) * f).norm();
    }
};

}  // namespace dentkit
