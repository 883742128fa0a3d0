#pragma once

#include <cmath>
#include <vector>

#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/core/frame.hpp"
#include "ps3d/features/feature_map.hpp"
#include "ps3d/features/hdd.hpp"
#include "ps3d/features/hog.hpp"
#include "ps3d/features/honv.hpp"

namespace ps3d {

/// Which per-cell descriptors to compute and stack, in this fixed order:
/// I-HOG, D-HOG, HONV, HDD.
struct DescriptorConfig {
    bool ihog = true;
    bool dhog = false;
    bool honv = false;
    bool hdd = true;
    int cell_size = 6;
    HddConfig hdd_cfg;
    HonvConfig honv_cfg;

    int channels() const {
        return (ihog ? detail::kHogChannels : 0) + (dhog ? detail::kHogChannels : 0) +
               (honv ? honv_cfg.channels() : 0) + (hdd ? hdd_cfg.channels() : 0);
    }

    void validate() const {
        if (!ihog && !dhog && !honv && !hdd)
            throw ConfigInvalid("descriptor set is empty");
        if (cell_size < 2) throw ConfigInvalid("cell_size must be at least 2");
        hdd_cfg.validate();
        honv_cfg.validate();
    }
};

inline FeatureMap compute_features(const ColorImage& color, const DepthImage& depth,
                                   const CameraIntrinsics& intr, const DescriptorConfig& cfg,
                                   double scale = 1.0) {
    cfg.validate();
    std::vector<FeatureMap> parts;
    if (cfg.ihog) parts.push_back(compute_hog(color, cfg.cell_size));
    if (cfg.dhog) parts.push_back(compute_dhog(depth, cfg.cell_size));
    if (cfg.honv) parts.push_back(compute_honv(depth, intr, cfg.cell_size, cfg.honv_cfg));
    if (cfg.hdd) parts.push_back(compute_hdd(depth, cfg.hdd_cfg, cfg.cell_size));

    std::vector<const FeatureMap*> ptrs;
    for (const FeatureMap& m : parts) ptrs.push_back(&m);
    FeatureMap out = concat_features(ptrs);
    out.set_scale(scale);
    return out;
}

/// Shrinks a color image with box (area-average) filtering.
inline ColorImage resize_color_area(const ColorImage& src, int dst_w, int dst_h) {
    if (dst_w < 1 || dst_h < 1) throw DimensionMismatch("resize target must be positive");
    const double rx = double(src.width()) / dst_w;
    const double ry = double(src.height()) / dst_h;
    ColorImage dst(dst_w, dst_h);
    for (int y = 0; y < dst_h; ++y) {
        const double y0 = y * ry, y1 = (y + 1) * ry;
        for (int x = 0; x < dst_w; ++x) {
            const double x0 = x * rx, x1 = (x + 1) * rx;
            double acc[3] = {0, 0, 0};
            double area = 0.0;
            for (int j = int(y0); j < int(std::ceil(y1)) && j < src.height(); ++j) {
                const double wy = std::min<double>(y1, j + 1) - std::max<double>(y0, j);
                if (wy <= 0) continue;
                for (int i = int(x0); i < int(std::ceil(x1)) && i < src.width(); ++i) {
                    const double wx = std::min<double>(x1, i + 1) - std::max<double>(x0, i);
                    if (wx <= 0) continue;
                    const Rgb8& p = src.at(i, j);
                    const double w = wx * wy;
                    acc[0] += w * p.r;
                    acc[1] += w * p.g;
                    acc[2] += w * p.b;
                    area += w;
                }
            }
            dst.at(x, y) = Rgb8{std::uint8_t(std::lround(acc[0] / area)),
                                std::uint8_t(std::lround(acc[1] / area)),
                                std::uint8_t(std::lround(acc[2] / area))};
        }
    }
    return dst;
}

/// Shrinks a depth map by picking nearest samples; depth VALUES keep their
/// metric meaning, and holes are never averaged into valid measurements.
inline DepthImage resize_depth_nearest(const DepthImage& src, int dst_w, int dst_h) {
    if (dst_w < 1 || dst_h < 1) throw DimensionMismatch("resize target must be positive");
    const double rx = double(src.width()) / dst_w;
    const double ry = double(src.height()) / dst_h;
    DepthImage dst(dst_w, dst_h);
    for (int y = 0; y < dst_h; ++y) {
        const int sy = std::min(int((y + 0.5) * ry), src.height() - 1);
        for (int x = 0; x < dst_w; ++x) {
            const int sx = std::min(int((x + 0.5) * rx), src.width() - 1);
            dst.at(x, y) = src.at(sx, sy);
        }
    }
    return dst;
}

struct PyramidLevel {
    FeatureMap features;
    DepthImage depth;             // resized to this level, metric values unchanged
    CameraIntrinsics intrinsics;  // rescaled to this level's pixel grid
    double scale = 1.0;           // original size / level size
};

struct FeaturePyramid {
    std::vector<PyramidLevel> levels;  // descending resolution
    double scale_step = 1.0;
};

inline FeaturePyramid build_pyramid(const RgbdFrame& frame, const DescriptorConfig& cfg,
                                    double scale_step, int min_level_size,
                                    int max_levels = 32) {
    cfg.validate();
    if (scale_step <= 1.0) throw ConfigInvalid("pyramid scale step must exceed 1");
    if (min_level_size < 3 * cfg.cell_size)
        throw ConfigInvalid("min_level_size must cover at least three cells");
    if (std::min(frame.width(), frame.height()) < min_level_size)
        throw ImageTooSmall("frame smaller than the minimum pyramid level");

    FeaturePyramid pyr;
    pyr.scale_step = scale_step;
    for (int level = 0; level < max_levels; ++level) {
        const double scale = std::pow(scale_step, level);
        const int w = int(std::lround(frame.width() / scale));
        const int h = int(std::lround(frame.height() / scale));
        if (std::min(w, h) < min_level_size) break;

        PyramidLevel out;
        out.scale = scale;
        out.intrinsics = frame.intrinsics.scaled(scale);
        if (level == 0) {
            out.depth = frame.depth;
            out.features =
                compute_features(frame.color, frame.depth, frame.intrinsics, cfg, scale);
        } else {
            const ColorImage color = resize_color_area(frame.color, w, h);
            out.depth = resize_depth_nearest(frame.depth, w, h);
            out.features = compute_features(color, out.depth, out.intrinsics, cfg, scale);
        }
        pyr.levels.push_back(std::move(out));
    }
    return pyr;
}

}  // namespace ps3d
