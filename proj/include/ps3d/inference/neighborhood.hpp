#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/inference/state_space.hpp"

namespace ps3d {

/// How candidate neighbors are gathered before the 3D distance check.
///  - Paper: 2D window of radius maxDist3D / (res * depth). Fast, but a
///    neighbor nearer to the camera can project outside the window.
///  - Conservative: window widened by assuming the neighbor sits at
///    depth - maxDist3D and accounting for the node's off-axis position;
///    provably misses nothing.
///  - Off: no pruning at all, every valid pair is kept (benchmark baseline).
enum class NeighborhoodMode { Paper, Conservative, Off };

inline const char* neighborhood_mode_name(NeighborhoodMode m) {
    switch (m) {
        case NeighborhoodMode::Paper: return "paper";
        case NeighborhoodMode::Conservative: return "conservative";
        case NeighborhoodMode::Off: return "off";
    }
    throw ConfigInvalid("unknown neighborhood mode");
}

inline NeighborhoodMode neighborhood_mode_from_name(const std::string& s) {
    for (const NeighborhoodMode m : {NeighborhoodMode::Paper, NeighborhoodMode::Conservative,
                                     NeighborhoodMode::Off})
        if (s == neighborhood_mode_name(m)) return m;
    throw ConfigInvalid("unknown neighborhood mode: " + s);
}

struct NeighborEntry {
    double dist = 0.0;
    std::int32_t id = 0;

    bool operator==(const NeighborEntry&) const = default;
};

/// Per node, the other nodes within max_dist in 3D, ascending by distance.
/// Depth-invalid nodes carry empty lists and appear in no list.
struct NeighborhoodMap {
    double max_dist = 0.0;
    std::vector<std::vector<NeighborEntry>> lists;

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& l : lists) n += l.size();
        return n;
    }
};

namespace detail {

inline void sort_entries(std::vector<NeighborEntry>& l) {
    std::sort(l.begin(), l.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
        return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
    });
}

}  // namespace detail

/// Reference O(L^2) construction: every valid pair is distance-checked.
/// Doubles as the unpruned map when max_dist is infinite.
inline NeighborhoodMap build_neighborhood_map_exhaustive(
    const StateSpace& ss, double max_dist = std::numeric_limits<double>::infinity()) {
    NeighborhoodMap map;
    map.max_dist = max_dist;
    map.lists.resize(ss.nodes.size());
    for (int i = 0; i < ss.size(); ++i) {
        if (!ss.nodes[i].has3d) continue;
        for (int j = 0; j < ss.size(); ++j) {
            if (j == i || !ss.nodes[j].has3d) continue;
            const double d = distance3d(ss.nodes[i].p, ss.nodes[j].p);
            if (d < max_dist) map.lists[i].push_back({d, j});
        }
        detail::sort_entries(map.lists[i]);
    }
    return map;
}

/// Windowed construction: for each node only the cells inside a 2D search
/// window are distance-checked. With NeighborhoodMode::Conservative the
/// window provably contains every 3D neighbor; the paper-style window can
/// miss neighbors much nearer to the camera than the node itself.
inline NeighborhoodMap build_neighborhood_map(const StateSpace& ss, const CameraIntrinsics& intr,
                                              double max_dist = 0.9,
                                              NeighborhoodMode mode = NeighborhoodMode::Conservative) {
    if (!(max_dist > 0.0)) throw ConfigInvalid("max_dist must be positive");
    if (mode == NeighborhoodMode::Off) return build_neighborhood_map_exhaustive(ss);
    intr.validate();
    NeighborhoodMap map;
    map.max_dist = max_dist;
    map.lists.resize(ss.nodes.size());
    constexpr double kMinDepth = 1e-3;  // meters; floors the conservative denominator
    for (int cy = 0; cy < ss.cells_h; ++cy)
        for (int cx = 0; cx < ss.cells_w; ++cx) {
            const StateNode& n = ss.node(cx, cy);
            if (!n.has3d) continue;
            // window half-size in pixels per axis
            double rx, ry;
            if (mode == NeighborhoodMode::Paper) {
                rx = ry = max_dist / (intr.res * n.depth);
            } else {
                // a neighbor within max_dist has depth > depth - max_dist and
                // offsets under max_dist on each 3D axis, which bounds its
                // pixel distance by (max_dist / min depth) * (f + |pixel - c|)
                const double zmin = std::max(double(n.depth) - max_dist, kMinDepth);
                rx = max_dist / zmin * (intr.fx + std::abs(n.px - intr.cx));
                ry = max_dist / zmin * (intr.fy + std::abs(n.py - intr.cy));
            }
            const double cap = double(std::max(ss.cells_w, ss.cells_h));
            const int rcx = int(std::min(std::ceil(rx / ss.cell_size), cap));
            const int rcy = int(std::min(std::ceil(ry / ss.cell_size), cap));
            std::vector<NeighborEntry>& out = map.lists[std::size_t(cy) * ss.cells_w + cx];
            const int y0 = std::max(0, cy - rcy), y1 = std::min(ss.cells_h - 1, cy + rcy);
            const int x0 = std::max(0, cx - rcx), x1 = std::min(ss.cells_w - 1, cx + rcx);
            for (int qy = y0; qy <= y1; ++qy)
                for (int qx = x0; qx <= x1; ++qx) {
                    if (qx == cx && qy == cy) continue;
                    const StateNode& q = ss.node(qx, qy);
                    if (!q.has3d) continue;
                    const double d = distance3d(n.p, q.p);
                    if (d < max_dist)
                        out.push_back({d, std::int32_t(qy) * ss.cells_w + qx});
                }
            detail::sort_entries(out);
        }
    return map;
}

}  // namespace ps3d
