#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"
#include "ps3d/features/feature_map.hpp"

namespace ps3d {

/// Histogram-of-oriented-gradients cells, 31 channels: 18 contrast-sensitive
/// orientation bins, 9 contrast-insensitive bins, 4 texture-energy channels.
/// Applied to intensity this is I-HOG, to a depth channel D-HOG.

namespace detail {

constexpr int kHogOrientations = 9;
constexpr int kHogChannels = 31;
constexpr float kHogTexture = 0.2357f;

/// Accumulates 18-orientation histograms over the cell grid and resolves
/// them with 2x2 block normalization. `grad(x, y, &dx, &dy)` reports the
/// gradient at a pixel, returning false where no contribution is wanted.
template <typename GradFn>
FeatureMap hog_from_gradients(int width, int height, int cell_size, GradFn&& grad) {
    if (cell_size < 2) throw ConfigInvalid("cell_size must be at least 2");
    const int cw = width / cell_size;
    const int ch = height / cell_size;
    if (cw < 1 || ch < 1)
        throw ImageTooSmall("image smaller than one descriptor cell");

    double uu[kHogOrientations], vv[kHogOrientations];
    for (int o = 0; o < kHogOrientations; ++o) {
        uu[o] = std::cos(o * M_PI / kHogOrientations);
        vv[o] = std::sin(o * M_PI / kHogOrientations);
    }

    // 18-bin signed orientation histogram per cell
    std::vector<double> hist(std::size_t(cw) * ch * 18, 0.0);
    auto hist_at = [&](int cx, int cy, int o) -> double& {
        return hist[(std::size_t(cy) * cw + cx) * 18 + o];
    };

    const int px_w = cw * cell_size;
    const int px_h = ch * cell_size;
    for (int y = 1; y < std::min(height - 1, px_h); ++y) {
        for (int x = 1; x < std::min(width - 1, px_w); ++x) {
            double dx, dy;
            if (!grad(x, y, &dx, &dy)) continue;
            const double v = std::sqrt(dx * dx + dy * dy);
            if (v == 0.0) continue;

            int best_o = 0;
            double best = 0.0;
            for (int o = 0; o < kHogOrientations; ++o) {
                const double dot = uu[o] * dx + vv[o] * dy;
                if (dot > best) {
                    best = dot;
                    best_o = o;
                } else if (-dot > best) {
                    best = -dot;
                    best_o = o + kHogOrientations;
                }
            }

            const double xp = (x + 0.5) / cell_size - 0.5;
            const double yp = (y + 0.5) / cell_size - 0.5;
            const int ixp = int(std::floor(xp));
            const int iyp = int(std::floor(yp));
            const double vx0 = xp - ixp, vy0 = yp - iyp;
            const double vx1 = 1.0 - vx0, vy1 = 1.0 - vy0;
            if (ixp >= 0 && iyp >= 0) hist_at(ixp, iyp, best_o) += vx1 * vy1 * v;
            if (ixp + 1 < cw && iyp >= 0) hist_at(ixp + 1, iyp, best_o) += vx0 * vy1 * v;
            if (ixp >= 0 && iyp + 1 < ch) hist_at(ixp, iyp + 1, best_o) += vx1 * vy0 * v;
            if (ixp + 1 < cw && iyp + 1 < ch) hist_at(ixp + 1, iyp + 1, best_o) += vx0 * vy0 * v;
        }
    }

    // per-cell gradient energy over unsigned orientations
    std::vector<double> norm(std::size_t(cw) * ch, 0.0);
    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx) {
            double e = 0.0;
            for (int o = 0; o < kHogOrientations; ++o) {
                const double s = hist_at(cx, cy, o) + hist_at(cx, cy, o + kHogOrientations);
                e += s * s;
            }
            norm[std::size_t(cy) * cw + cx] = e;
        }
    auto norm_at = [&](int cx, int cy) {
        cx = std::clamp(cx, 0, cw - 1);
        cy = std::clamp(cy, 0, ch - 1);
        return norm[std::size_t(cy) * cw + cx];
    };

    constexpr double eps = 1e-4;
    FeatureMap out(cw, ch, kHogChannels, cell_size);
    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx) {
            // block energies of the four 2x2 neighborhoods containing the cell,
            // border cells reuse their clamped neighbors
            const double n1 = 1.0 / std::sqrt(norm_at(cx, cy) + norm_at(cx + 1, cy) +
                                              norm_at(cx, cy + 1) + norm_at(cx + 1, cy + 1) + eps);
            const double n2 = 1.0 / std::sqrt(norm_at(cx - 1, cy) + norm_at(cx, cy) +
                                              norm_at(cx - 1, cy + 1) + norm_at(cx, cy + 1) + eps);
            const double n3 = 1.0 / std::sqrt(norm_at(cx, cy - 1) + norm_at(cx + 1, cy - 1) +
                                              norm_at(cx, cy) + norm_at(cx + 1, cy) + eps);
            const double n4 = 1.0 / std::sqrt(norm_at(cx - 1, cy - 1) + norm_at(cx, cy - 1) +
                                              norm_at(cx - 1, cy) + norm_at(cx, cy) + eps);

            float* dst = out.cell(cx, cy);
            double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
            for (int o = 0; o < 18; ++o) {
                const double h = hist_at(cx, cy, o);
                const double h1 = std::min(h * n1, 0.2);
                const double h2 = std::min(h * n2, 0.2);
                const double h3 = std::min(h * n3, 0.2);
                const double h4 = std::min(h * n4, 0.2);
                dst[o] = float(0.5 * (h1 + h2 + h3 + h4));
                t1 += h1;
                t2 += h2;
                t3 += h3;
                t4 += h4;
            }
            for (int o = 0; o < kHogOrientations; ++o) {
                const double h = hist_at(cx, cy, o) + hist_at(cx, cy, o + kHogOrientations);
                dst[18 + o] = float(0.5 * (std::min(h * n1, 0.2) + std::min(h * n2, 0.2) +
                                           std::min(h * n3, 0.2) + std::min(h * n4, 0.2)));
            }
            dst[27] = kHogTexture * float(t1);
            dst[28] = kHogTexture * float(t2);
            dst[29] = kHogTexture * float(t3);
            dst[30] = kHogTexture * float(t4);
        }
    return out;
}

}  // namespace detail

/// HOG over a single channel. With `zero_is_missing` (the depth case) a
/// pixel whose centered-difference stencil touches a zero value is skipped
/// instead of producing a fabricated gradient at a sensor hole.
inline FeatureMap compute_hog(const GrayImage& img, int cell_size,
                              bool zero_is_missing = false) {
    return detail::hog_from_gradients(
        img.width(), img.height(), cell_size,
        [&](int x, int y, double* dx, double* dy) {
            if (zero_is_missing) {
                if (!depth_valid(img.at(x, y)) || !depth_valid(img.at(x - 1, y)) ||
                    !depth_valid(img.at(x + 1, y)) || !depth_valid(img.at(x, y - 1)) ||
                    !depth_valid(img.at(x, y + 1)))
                    return false;
            }
            *dx = double(img.at(x + 1, y)) - img.at(x - 1, y);
            *dy = double(img.at(x, y + 1)) - img.at(x, y - 1);
            return true;
        });
}

/// HOG over a color image: per pixel, the gradient of the channel with the
/// largest gradient magnitude.
inline FeatureMap compute_hog(const ColorImage& img, int cell_size) {
    return detail::hog_from_gradients(
        img.width(), img.height(), cell_size,
        [&](int x, int y, double* dx, double* dy) {
            double best = -1.0;
            auto consider = [&](int ch) {
                auto get = [&](int xx, int yy) {
                    const Rgb8& p = img.at(xx, yy);
                    return double(ch == 0 ? p.r : ch == 1 ? p.g : p.b);
                };
                const double gx = get(x + 1, y) - get(x - 1, y);
                const double gy = get(x, y + 1) - get(x, y - 1);
                const double mag = gx * gx + gy * gy;
                if (mag > best) {
                    best = mag;
                    *dx = gx;
                    *dy = gy;
                }
            };
            consider(0);
            consider(1);
            consider(2);
            return true;
        });
}

/// D-HOG: gradient histogram on the depth channel with hole skipping.
inline FeatureMap compute_dhog(const DepthImage& depth, int cell_size) {
    return compute_hog(depth, cell_size, /*zero_is_missing=*/true);
}

}  // namespace ps3d
