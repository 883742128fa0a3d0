#pragma once

#include <cmath>
#include <vector>

#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"
#include "ps3d/features/feature_map.hpp"

namespace ps3d {

/// Histogram of depth differences. Four 3x3 difference kernels are
/// correlated with the depth map at several scales; each response is divided
/// by the center depth, which cancels global depth changes, then coarsely
/// quantized. Cells histogram the (kernel, scale, level) triples.

/// Difference kernels, row-major: horizontal, main diagonal, vertical,
/// anti-diagonal. All sum to zero and negate under 180-degree rotation.
constexpr int kHddKernels[4][3][3] = {
    {{0, 0, 0}, {-1, 0, 1}, {0, 0, 0}},
    {{-1, 0, 0}, {0, 0, 0}, {0, 0, 1}},
    {{0, -1, 0}, {0, 0, 0}, {0, 1, 0}},
    {{0, 0, -1}, {0, 0, 0}, {1, 0, 0}},
};

struct HddConfig {
    int n_scales = 3;
    int quant_levels = 10;
    double response_clip = 0.3;  // quantization range is [-clip, clip]

    int channels() const { return 4 * n_scales * quant_levels; }

    /// Channel of (kernel k, scale s, level q), all zero-based.
    int channel(int k, int s, int q) const { return (k * n_scales + s) * quant_levels + q; }

    int quantize(double response) const {
        const double width = 2.0 * response_clip / quant_levels;
        const int q = int(std::floor((response + response_clip) / width));
        return std::min(std::max(q, 0), quant_levels - 1);
    }

    void validate() const {
        if (n_scales < 1) throw ConfigInvalid("HDD needs at least one scale");
        if (quant_levels < 2) throw ConfigInvalid("HDD needs at least two quantization levels");
        if (response_clip <= 0.0) throw ConfigInvalid("HDD response clip must be positive");
    }
};

namespace detail {

/// Halves the image by averaging disjoint 2x2 blocks. A block containing
/// any missing value is missing, so holes never leak into averages.
inline DepthImage pool_half(const DepthImage& src) {
    const int w = src.width() / 2, h = src.height() / 2;
    if (w < 1 || h < 1) throw ImageTooSmall("depth image too small to pool");
    DepthImage dst(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float a = src.at(2 * x, 2 * y), b = src.at(2 * x + 1, 2 * y);
            const float c = src.at(2 * x, 2 * y + 1), d = src.at(2 * x + 1, 2 * y + 1);
            dst.at(x, y) = (depth_valid(a) && depth_valid(b) && depth_valid(c) &&
                            depth_valid(d))
                               ? (a + b + c + d) / 4.0f
                               : kInvalidDepth;
        }
    return dst;
}

/// Correlation of kernel k with the 3x3 patch at (x, y); nullptr-free raw
/// access, caller guarantees interiority.
inline double hdd_raw_response(const DepthImage& d, int k, int x, int y) {
    double sum = 0.0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int coef = kHddKernels[k][dy + 1][dx + 1];
            if (coef != 0) sum += coef * double(d.at(x + dx, y + dy));
        }
    return sum;
}

inline bool hdd_patch_valid(const DepthImage& d, int x, int y) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            if (!depth_valid(d.at(x + dx, y + dy))) return false;
    return true;
}

}  // namespace detail

/// Normalized response of kernel `kernel` (1-based) at scale `scale`
/// (1-based; scale s halves the image s-1 times) and position (x, y) in
/// scale coordinates.
inline double hdd_response(const DepthImage& depth, int kernel, int scale, int x, int y) {
    if (kernel < 1 || kernel > 4) throw ConfigInvalid("HDD kernel index must be in 1..4");
    if (scale < 1) throw ConfigInvalid("HDD scale index must be >= 1");
    DepthImage img = depth;
    for (int s = 1; s < scale; ++s) img = detail::pool_half(img);
    if (x < 1 || x >= img.width() - 1 || y < 1 || y >= img.height() - 1)
        throw OutOfBounds("HDD response position must be interior to the scaled image");
    const float center = img.at(x, y);
    if (!depth_valid(center)) throw InvalidDepth("HDD response needs valid center depth");
    return detail::hdd_raw_response(img, kernel - 1, x, y) / double(center);
}

inline FeatureMap compute_hdd(const DepthImage& depth, const HddConfig& cfg, int cell_size) {
    cfg.validate();
    const int cw = depth.width() / cell_size;
    const int ch = depth.height() / cell_size;
    if (cw < 1 || ch < 1) throw ImageTooSmall("depth image smaller than one cell");

    FeatureMap out(cw, ch, cfg.channels(), cell_size);
    DepthImage img = depth;
    for (int s = 0; s < cfg.n_scales; ++s) {
        if (s > 0) {
            if (img.width() < 2 || img.height() < 2) break;
            img = detail::pool_half(img);
        }
        if (img.width() < 3 || img.height() < 3) break;
        const int stride = 1 << s;  // one scale-s pixel spans this many base pixels
        for (int y = 1; y < img.height() - 1; ++y)
            for (int x = 1; x < img.width() - 1; ++x) {
                if (!detail::hdd_patch_valid(img, x, y)) continue;
                const int cx = (x * stride) / cell_size;
                const int cy = (y * stride) / cell_size;
                if (cx >= cw || cy >= ch) continue;
                const double center = img.at(x, y);
                float* cell = out.cell(cx, cy);
                for (int k = 0; k < 4; ++k) {
                    const double r = detail::hdd_raw_response(img, k, x, y) / center;
                    cell[cfg.channel(k, s, cfg.quantize(r))] += 1.0f;
                }
            }
    }

    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx) l2hys_normalize(out.cell(cx, cy), cfg.channels());
    return out;
}

}  // namespace ps3d
