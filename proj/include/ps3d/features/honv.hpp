#pragma once

#include <cmath>

#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"
#include "ps3d/features/feature_map.hpp"

namespace ps3d {

/// Histogram of oriented normal vectors: per cell, a 2D histogram over the
/// azimuth and zenith angles of the surface normal estimated at each pixel.
struct HonvConfig {
    int azimuth_bins = 8;
    int zenith_bins = 4;

    int channels() const { return azimuth_bins * zenith_bins; }

    void validate() const {
        if (azimuth_bins < 1 || zenith_bins < 1)
            throw ConfigInvalid("HONV bin counts must be positive");
    }
};

/// Normals come from the cross product of the two centered-difference chords
/// of the reprojected surface, which is exact on planar patches. A pixel
/// whose stencil touches missing depth contributes nothing; a cell with no
/// contributing pixel stays a zero vector.
inline FeatureMap compute_honv(const DepthImage& depth, const CameraIntrinsics& intr,
                               int cell_size, const HonvConfig& cfg = {}) {
    cfg.validate();
    const int cw = depth.width() / cell_size;
    const int ch = depth.height() / cell_size;
    if (cw < 1 || ch < 1) throw ImageTooSmall("depth image smaller than one cell");

    FeatureMap out(cw, ch, cfg.channels(), cell_size);
    const double azimuth_width = 2.0 * M_PI / cfg.azimuth_bins;
    const double zenith_width = (M_PI / 2.0) / cfg.zenith_bins;

    for (int y = 1; y < depth.height() - 1; ++y) {
        for (int x = 1; x < depth.width() - 1; ++x) {
            const int cx = x / cell_size, cy = y / cell_size;
            if (cx >= cw || cy >= ch) continue;
            const float zc = depth.at(x, y);
            const float zl = depth.at(x - 1, y), zr = depth.at(x + 1, y);
            const float zu = depth.at(x, y - 1), zd = depth.at(x, y + 1);
            if (!depth_valid(zc) || !depth_valid(zl) || !depth_valid(zr) ||
                !depth_valid(zu) || !depth_valid(zd))
                continue;

            const Point3D pl = reproject(x - 1, y, zl, intr);
            const Point3D pr = reproject(x + 1, y, zr, intr);
            const Point3D pu = reproject(x, y - 1, zu, intr);
            const Point3D pd = reproject(x, y + 1, zd, intr);
            const double tx[3] = {pr.x - pl.x, pr.y - pl.y, pr.z - pl.z};
            const double ty[3] = {pd.x - pu.x, pd.y - pu.y, pd.z - pu.z};
            double n[3] = {tx[1] * ty[2] - tx[2] * ty[1], tx[2] * ty[0] - tx[0] * ty[2],
                           tx[0] * ty[1] - tx[1] * ty[0]};
            const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
            if (len == 0.0) continue;
            // face the camera (negative z)
            if (n[2] > 0.0)
                for (double& c : n) c = -c;

            const double zenith = std::acos(std::min(1.0, -n[2] / len));
            int zbin = int(zenith / zenith_width);
            zbin = std::min(zbin, cfg.zenith_bins - 1);
            // signed zeros would flip atan2 between 0 and -pi on flat patches
            const double azimuth =
                (n[0] == 0.0 && n[1] == 0.0) ? 0.0 : std::atan2(n[1], n[0]);  // [-pi, pi]
            int abin = int((azimuth + M_PI) / azimuth_width);
            abin = std::min(std::max(abin, 0), cfg.azimuth_bins - 1);

            out.cell(cx, cy)[zbin * cfg.azimuth_bins + abin] += 1.0f;
        }
    }

    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx) l2hys_normalize(out.cell(cx, cy), cfg.channels());
    return out;
}

}  // namespace ps3d
