#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <limits>
#include <vector>

namespace dentkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Axis-aligned bounding box.
struct Aabb {
    Vec3 min{std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Vec3 max{-std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

    void extend(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }

    bool empty() const { return !(min.x() <= max.x()); }
    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 extent() const { return max - min; }
    double diagonal() const { return empty() ? 0.0 : (max - min).norm(); }
};

inline Aabb bounding_box(const std::vector<Vec3>& points) {
    Aabb box;
    for (const Vec3& p : points) box.extend(p);
    return box;
}

}  // namespace dentkit
