#pragma once

#include <algorithm>
#include <vector>

#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"

namespace ps3d {

/// One candidate part placement: a cell-grid location together with its 3D
/// lift. Nodes over cells with no valid depth are kept but flagged.
struct StateNode {
    int cx = 0;
    int cy = 0;
    double px = 0.0;  // pixel center of the cell at this level's resolution
    double py = 0.0;
    float depth = kInvalidDepth;  // meters; median over the cell footprint
    bool has3d = false;
    Point3D p;
};

/// All candidate placements of one pyramid level, one node per cell.
struct StateSpace {
    int cells_w = 0;
    int cells_h = 0;
    int cell_size = 0;
    std::vector<StateNode> nodes;  // row-major, cells_w * cells_h

    int size() const { return int(nodes.size()); }
    const StateNode& node(int cx, int cy) const { return nodes[std::size_t(cy) * cells_w + cx]; }
    StateNode& node(int cx, int cy) { return nodes[std::size_t(cy) * cells_w + cx]; }
};

namespace detail {

/// Median with the usual even-count averaging. Mutates its scratch argument.
inline float median_inplace(std::vector<float>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5f * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Lifts the cell grid to 3D: each node takes the median of the valid depth
/// readings inside its pixel footprint and is reprojected at the footprint
/// center. Cells whose footprint holds no valid reading stay depth-invalid.
inline StateSpace build_state_space(int cells_w, int cells_h, int cell_size,
                                    const DepthImage& depth, const CameraIntrinsics& intr) {
    if (cells_w < 1 || cells_h < 1) throw DimensionMismatch("state space needs a non-empty grid");
    if (cell_size < 2) throw ConfigInvalid("cell_size must be at least 2");
    StateSpace ss;
    ss.cells_w = cells_w;
    ss.cells_h = cells_h;
    ss.cell_size = cell_size;
    ss.nodes.resize(std::size_t(cells_w) * cells_h);
    std::vector<float> scratch;
    for (int cy = 0; cy < cells_h; ++cy)
        for (int cx = 0; cx < cells_w; ++cx) {
            StateNode& n = ss.node(cx, cy);
            n.cx = cx;
            n.cy = cy;
            n.px = (cx + 0.5) * cell_size - 0.5;
            n.py = (cy + 0.5) * cell_size - 0.5;
            scratch.clear();
            const int x0 = cx * cell_size, y0 = cy * cell_size;
            const int x1 = std::min(x0 + cell_size, depth.width());
            const int y1 = std::min(y0 + cell_size, depth.height());
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    if (depth_valid(depth.at(x, y))) scratch.push_back(depth.at(x, y));
            if (!scratch.empty()) {
                n.depth = detail::median_inplace(scratch);
                n.has3d = true;
                n.p = reproject(n.px, n.py, n.depth, intr);
            }
        }
    return ss;
}

}  // namespace ps3d
