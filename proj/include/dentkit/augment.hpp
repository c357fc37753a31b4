#pragma once

#include "dentkit/mesh.hpp"

#include <cstdint>
#include <random>

namespace dentkit {

enum class AngleUnit { Radians, Degrees };

struct AugmentConfig {
    uint64_t seed = 0;
    double translation_range = 0.1;  // fraction of the bbox extent per axis
    double rotation_sigma = 1.0;     // stddev of the rotation angle
    AngleUnit rotation_unit = AngleUnit::Radians;
    bool rotate_x = false;
    bool rotate_y = false;
    bool rotate_z = true;  // arch pose varies mainly about the vertical axis
};

// Seedable portable random stream. The engine is std::mt19937_64 (fully
// specified by the standard) and the uniform/normal transforms are written
// out here rather than taken from <random> distributions, whose output is
// implementation-defined. Results are therefore bit-identical across
// platforms for a given seed.
class AugmentRng {
public:
    explicit AugmentRng(uint64_t seed) : engine_(seed) {}

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // [-range, range)
    double uniform_symmetric(double range) { return range * (2.0 * uniform() - 1.0); }

    // Box-Muller (cosine branch only, one draw of two uniforms per value).
    double normal(double sigma) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
};

struct TranslateResult {
    LabeledPointCloud cloud;
    Vec3 offset = Vec3::Zero();
};

struct RotateResult {
    LabeledPointCloud cloud;
    Mat3 rotation = Mat3::Identity();
    Vec3 angles = Vec3::Zero();  // radians, per axis (zero for unselected axes)
};

// Per-axis offset u * bbox_extent with u ~ Uniform[-range, range], drawn in
// x, y, z order; the same offset shifts every point, normals unchanged.
TranslateResult random_translate(const LabeledPointCloud& cloud, const AugmentConfig& config,
                                 AugmentRng& rng);

// Angles ~ Normal(0, sigma) per selected axis (drawn for selected axes in
// x, y, z order); rotation about the cloud centroid applied to positions
// and normals, composed X then Y then Z.
RotateResult random_rotate(const LabeledPointCloud& cloud, const AugmentConfig& config,
                           AugmentRng& rng);

}  // namespace dentkit
