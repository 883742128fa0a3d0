#pragma once

#include <cmath>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"

namespace ps3d {

/// One pre-aligned color+depth capture with optional person annotations.
struct RgbdFrame {
    ColorImage color;
    DepthImage depth;
    CameraIntrinsics intrinsics;
    std::vector<PersonAnnotation> annotations;

    int width() const { return color.width(); }
    int height() const { return color.height(); }

    void validate() const {
        if (color.width() != depth.width() || color.height() != depth.height())
            throw DimensionMismatch("color and depth dimensions differ");
        intrinsics.validate();
        for (std::size_t p = 0; p < annotations.size(); ++p) {
            const PersonAnnotation& a = annotations[p];
            if (a.bbox.area() <= 0.0)
                throw ConfigInvalid("annotation " + std::to_string(p) + " has empty bbox");
            for (int j = 0; j < kNumJoints; ++j) {
                const JointAnnotation& ja = a.joints[j];
                if (!std::isfinite(ja.u) || !std::isfinite(ja.v))
                    throw ConfigInvalid("annotation " + std::to_string(p) +
                                        " has non-finite joint position");
                if (ja.visible && (ja.u < 0.0 || ja.u >= color.width() || ja.v < 0.0 ||
                                   ja.v >= color.height()))
                    throw OutOfBounds("visible joint outside image bounds in annotation " +
                                      std::to_string(p));
            }
        }
        for (int y = 0; y < depth.height(); ++y)
            for (int x = 0; x < depth.width(); ++x)
                if (depth.at(x, y) < 0.0f)
                    throw InvalidDepth("negative depth value");
    }
};

/// Depth at a pixel, in meters; 0 when missing or out of bounds.
inline float depth_at(const DepthImage& depth, int x, int y) {
    return depth.in_bounds(x, y) ? depth.at(x, y) : kInvalidDepth;
}

}  // namespace ps3d
