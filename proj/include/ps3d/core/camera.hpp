#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"

namespace ps3d {

/// Pinhole camera model for a pre-aligned color/depth pair.
///
/// `res` is the lateral extent of one pixel in meters, per meter of depth.
/// For a square-pixel camera res = 1/fx. With unequal focal lengths the
/// smaller of the two per-axis extents (1/max(fx, fy)) is kept so that any
/// pixel window derived from res covers both axes.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double res = 0.0;

    static CameraIntrinsics from_focal(double fx, double fy, double cx, double cy) {
        if (fx <= 0.0 || fy <= 0.0)
            throw ConfigInvalid("focal lengths must be positive");
        CameraIntrinsics k;
        k.fx = fx;
        k.fy = fy;
        k.cx = cx;
        k.cy = cy;
        k.res = 1.0 / std::max(fx, fy);
        return k;
    }

    /// Intrinsics of the same camera after resizing the image by 1/scale.
    CameraIntrinsics scaled(double scale) const {
        CameraIntrinsics k = *this;
        k.fx = fx / scale;
        k.fy = fy / scale;
        k.cx = cx / scale;
        k.cy = cy / scale;
        k.res = res * scale;
        return k;
    }

    void validate() const {
        if (fx <= 0.0 || fy <= 0.0) throw ConfigInvalid("focal lengths must be positive");
        if (res <= 0.0) throw ConfigInvalid("pixel resolution must be positive");
        if (fx == fy && std::abs(res - 1.0 / fx) > 1e-9)
            throw ConfigInvalid("res inconsistent with focal length of square-pixel camera");
    }
};

/// Point in camera coordinates, meters. +x right, +y down, +z forward.
struct Point3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Point3D&) const = default;
};

/// Back-projects pixel (u, v) with depth z to camera coordinates.
inline Point3D reproject(double u, double v, double z, const CameraIntrinsics& intr) {
    if (!(z > 0.0)) throw InvalidDepth("cannot reproject pixel with missing depth");
    return Point3D{(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

/// Projects a 3D camera-space point back to pixel coordinates.
inline std::pair<double, double> project(const Point3D& p, const CameraIntrinsics& intr) {
    if (!(p.z > 0.0)) throw InvalidDepth("cannot project point with non-positive z");
    return {p.x * intr.fx / p.z + intr.cx, p.y * intr.fy / p.z + intr.cy};
}

inline double distance3d(const Point3D& a, const Point3D& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// 3D distance between two pixels carrying depth measurements.
inline double distance3d(double ua, double va, double za, double ub, double vb, double zb,
                         const CameraIntrinsics& intr) {
    if (!(za > 0.0) || !(zb > 0.0))
        throw InvalidDepth("3D distance undefined over missing depth");
    return distance3d(reproject(ua, va, za, intr), reproject(ub, vb, zb, intr));
}

}  // namespace ps3d
