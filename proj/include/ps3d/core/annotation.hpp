#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ps3d/core/errors.hpp"

namespace ps3d {

/// Upper-body joint set: head, shoulders, elbows, wrists, hips.
enum class Joint : std::uint8_t {
    Head = 0,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
};

constexpr int kNumJoints = 9;

inline const char* joint_name(Joint j) {
    static const char* names[kNumJoints] = {
        "head",       "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
        "left_wrist", "right_wrist",   "left_hip",       "right_hip"};
    return names[static_cast<int>(j)];
}

inline Joint joint_from_name(const std::string& name) {
    for (int i = 0; i < kNumJoints; ++i)
        if (name == joint_name(static_cast<Joint>(i))) return static_cast<Joint>(i);
    throw ConfigInvalid("unknown joint name: " + name);
}

/// Pixel position of one joint. Invisible joints keep their position so the
/// full configuration can still be scored, but are excluded from metrics.
struct JointAnnotation {
    double u = 0.0;
    double v = 0.0;
    bool visible = true;

    bool operator==(const JointAnnotation&) const = default;
};

/// Axis-aligned pixel box, top-left origin.
struct BoxF {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w > 0.0 && h > 0.0 ? w * h : 0.0; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }

    bool operator==(const BoxF&) const = default;
};

inline double box_intersection(const BoxF& a, const BoxF& b) {
    const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
    return ix * iy;
}

/// Intersection over union; 0 when neither box has positive area.
inline double iou(const BoxF& a, const BoxF& b) {
    const double inter = box_intersection(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

struct PersonAnnotation {
    std::array<JointAnnotation, kNumJoints> joints;
    BoxF bbox;
    bool difficult = false;

    int visible_count() const {
        int n = 0;
        for (const auto& j : joints) n += j.visible ? 1 : 0;
        return n;
    }

    /// A person enters pose training/evaluation only with more than six
    /// visible joints; others are kept for box-level bookkeeping.
    bool usable_for_pose() const { return visible_count() > 6; }

    bool operator==(const PersonAnnotation&) const = default;
};

}  // namespace ps3d
