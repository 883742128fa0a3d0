#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ps3d/core/frame.hpp"
#include "ps3d/inference/inference.hpp"
#include "ps3d/model/model.hpp"

namespace ps3d {

/// Colors follow the usual pose-illustration convention: white for the left
/// arm, magenta for the right, a neutral green for the head and torso links.
struct OverlayStyle {
    Rgb8 left_arm{255, 255, 255};
    Rgb8 right_arm{255, 0, 255};
    Rgb8 body{70, 200, 90};
    Rgb8 box{170, 170, 170};
    int line_half_width = 1;
    int joint_radius = 2;
};

namespace detail {

/// Native-resolution pixel position of a placed part. Mirrors the state
/// space's cell-center formula so overlays land exactly on the detection.
inline double part_pixel_x(const PlacedPart& p, int cell_size, double level_scale) {
    return ((p.cx + 0.5) * cell_size - 0.5) * level_scale;
}

inline double part_pixel_y(const PlacedPart& p, int cell_size, double level_scale) {
    return ((p.cy + 0.5) * cell_size - 0.5) * level_scale;
}

inline void fill_square(ColorImage& img, int cx, int cy, int r, Rgb8 c) {
    const int x0 = std::max(0, cx - r), x1 = std::min(img.width() - 1, cx + r);
    const int y0 = std::max(0, cy - r), y1 = std::min(img.height() - 1, cy + r);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) img.at(x, y) = c;
}

inline void draw_segment(ColorImage& img, double x0, double y0, double x1, double y1,
                         int half_w, Rgb8 c) {
    const int steps = std::max(1, int(std::ceil(std::hypot(x1 - x0, y1 - y0) * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        const double t = double(s) / steps;
        fill_square(img, int(std::lround(x0 + t * (x1 - x0))),
                    int(std::lround(y0 + t * (y1 - y0))), half_w, c);
    }
}

inline void draw_box_outline(ColorImage& img, const BoxF& b, Rgb8 c) {
    draw_segment(img, b.x, b.y, b.right(), b.y, 0, c);
    draw_segment(img, b.x, b.bottom(), b.right(), b.bottom(), 0, c);
    draw_segment(img, b.x, b.y, b.x, b.bottom(), 0, c);
    draw_segment(img, b.right(), b.y, b.right(), b.bottom(), 0, c);
}

inline bool is_left_arm(const std::string& name) {
    return name == "left_elbow" || name == "left_wrist";
}

inline bool is_right_arm(const std::string& name) {
    return name == "right_elbow" || name == "right_wrist";
}

inline Rgb8 part_color(const std::string& name, const OverlayStyle& style) {
    if (is_left_arm(name)) return style.left_arm;
    if (is_right_arm(name)) return style.right_arm;
    return style.body;
}

}  // namespace detail

/// Draws one detected pose: bounding box, skeleton links, joint markers.
inline void draw_pose(ColorImage& img, const PoseDetection& det, const PsModel& m,
                      double scale_step, const OverlayStyle& style = {}) {
    const double scale = std::pow(scale_step, det.level);
    const int cell = m.descriptors.cell_size;
    auto px = [&](int i) { return detail::part_pixel_x(det.parts[std::size_t(i)], cell, scale); };
    auto py = [&](int i) { return detail::part_pixel_y(det.parts[std::size_t(i)], cell, scale); };

    detail::draw_box_outline(img, det.bbox, style.box);
    // head and torso links first, arms on top so their colors stay readable
    for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < m.parts(); ++i) {
            const int parent = m.tree.part(i).parent;
            if (parent < 0) continue;
            const std::string& name = m.tree.part(i).name;
            const bool arm = detail::is_left_arm(name) || detail::is_right_arm(name);
            if ((pass == 1) != arm) continue;
            detail::draw_segment(img, px(i), py(i), px(parent), py(parent),
                                 style.line_half_width, detail::part_color(name, style));
        }
    for (int i = 0; i < m.parts(); ++i)
        detail::fill_square(img, int(std::lround(px(i))), int(std::lround(py(i))),
                            style.joint_radius, detail::part_color(m.tree.part(i).name, style));
}

/// Copy of the frame's color image with every detection drawn on it.
inline ColorImage render_overlay(const RgbdFrame& frame, const std::vector<PoseDetection>& dets,
                                 const PsModel& m, double scale_step,
                                 const OverlayStyle& style = {}) {
    ColorImage img = frame.color;
    for (const PoseDetection& d : dets) draw_pose(img, d, m, scale_step, style);
    return img;
}

}  // namespace ps3d
