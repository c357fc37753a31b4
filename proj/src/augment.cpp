#include "dentkit/augment.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace dentkit {

TranslateResult random_translate(const LabeledPointCloud& cloud, const AugmentConfig& config,
                                 AugmentRng& rng) {
    TranslateResult result;
    result.cloud = cloud;
    if (cloud.points.empty()) return result;

    const Aabb box = bounding_box(cloud.points);
    const Vec3 extent = box.extent();
    for (int axis = 0; axis < 3; ++axis) {
        result.offset[axis] = rng.uniform_symmetric(config.translation_range) * extent[axis];
    }
    for (Vec3& p : result.cloud.points) p += result.offset;
    return result;
}

RotateResult random_rotate(const LabeledPointCloud& cloud, const AugmentConfig& config,
                           AugmentRng& rng) {
    RotateResult result;
    result.cloud = cloud;
    if (cloud.points.empty()) return result;

    const double to_radians =
        config.rotation_unit == AngleUnit::Degrees ? M_PI / 180.0 : 1.0;
    const bool selected[3] = {config.rotate_x, config.rotate_y, config.rotate_z};
    for (int axis = 0; axis < 3; ++axis) {
        if (selected[axis]) {
            result.angles[axis] = rng.normal(config.rotation_sigma) * to_radians;
        }
    }

    // Composition order: X first, then Y, then Z.
    result.rotation =
        (Eigen::AngleAxisd(result.angles.z(), Vec3::UnitZ()) *
         Eigen::AngleAxisd(result.angles.y(), Vec3::UnitY()) *
         Eigen::AngleAxisd(result.angles.x(), Vec3::UnitX()))
            .toRotationMatrix();

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : cloud.points) centroid += p;
    centroid /= static_cast<double>(cloud.points.size());

    for (Vec3& p : result.cloud.points) p = centroid + result.rotation * (p - centroid);
    for (Vec3& n : result.cloud.normals) n = result.rotation * n;
    return result;
}

}  // namespace dentkit
