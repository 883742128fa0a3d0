#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/features/pyramid.hpp"
#include "ps3d/inference/gdt.hpp"
#include "ps3d/inference/neighborhood.hpp"
#include "ps3d/inference/state_space.hpp"
#include "ps3d/model/model.hpp"

namespace ps3d {

/// Cells a part cannot occupy carry this score. Kept finite so that the
/// transforms stay NaN-free; any total below kInfeasibleScore means some
/// part of the configuration was unplaceable.
constexpr double kUnplaceableScore = -1e30;
constexpr double kInfeasibleScore = -1e29;

/// One detected pose: a placement for every part, its total score, and a
/// bounding box in native-resolution pixels.
struct PoseDetection {
    std::vector<PlacedPart> parts;
    double score = 0.0;
    BoxF bbox;
    int level = 0;
};

struct InferenceConfig {
    double max_dist3d = 0.9;  // meters; maximum 3D part-to-part distance
    NeighborhoodMode mode = NeighborhoodMode::Paper;
    bool use_gdt = true;  // accelerate image-plane messages when concave
};

namespace detail {

/// Deformation score of placing the child at node qn with the parent at
/// node pn, for one (child type, parent type) pair. Shares its arithmetic
/// with pairwise_score so scores agree bit for bit across code paths.
inline double edge_pair_score(const PsModel& m, const EdgeParams& e, int pair,
                              const StateNode& qn, const StateNode& pn) {
    const Anchor& a = e.anchor[pair];
    const std::vector<double>& w = e.w[pair];
    double s = e.bias[pair];
    switch (m.variant) {
        case PsiVariant::Psi2D: {
            const auto psi = psi_2d(qn.cx, qn.cy, pn.cx, pn.cy, a);
            for (std::size_t k = 0; k < psi.size(); ++k) s += w[k] * psi[k];
            return s;
        }
        case PsiVariant::Psi3D1: {
            const auto psi = psi_3d_1(qn.p, pn.p, a);
            for (std::size_t k = 0; k < psi.size(); ++k) s += w[k] * psi[k];
            return s;
        }
        case PsiVariant::Psi3D2: {
            const auto psi = psi_3d_2(qn.p, pn.p, a);
            for (std::size_t k = 0; k < psi.size(); ++k) s += w[k] * psi[k];
            return s;
        }
        case PsiVariant::Psi3D3: {
            const auto psi = psi_3d_3(qn.p, pn.p, a);
            for (std::size_t k = 0; k < psi.size(); ++k) s += w[k] * psi[k];
            return s;
        }
        case PsiVariant::Psi3D4: {
            const auto psi = psi_3d_4(qn.p, pn.p, qn.cx, qn.cy, pn.cx, pn.cy, a,
                                      m.psi4_distance);
            for (std::size_t k = 0; k < psi.size(); ++k) s += w[k] * psi[k];
            return s;
        }
    }
    throw ConfigInvalid("unknown deformation variant");
}

/// Cells where a part may be placed: the template must fit, and under 3D
/// deformation variants the node must carry a valid 3D lift (a single-part
/// model has no pairwise terms, so it may sit anywhere the template fits).
inline std::vector<char> placeable_mask(const PsModel& m, int W, int H, const StateSpace& ss) {
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    const bool need3d = psi_needs_depth(m.variant) && m.parts() > 1;
    std::vector<char> mask(std::size_t(W) * H, 0);
    for (int cy = hh; cy < H - hh; ++cy)
        for (int cx = hw; cx < W - hw; ++cx)
            mask[std::size_t(cy) * W + cx] = need3d ? char(ss.node(cx, cy).has3d) : char(1);
    return mask;
}

/// Dense appearance tables for one part, [type * L + cell]; matches
/// appearance_score exactly at every placeable cell.
inline void fill_appearance(const PsModel& m, const FeatureMap& fmap, int part,
                            const std::vector<char>& mask, std::vector<double>& out) {
    const int W = fmap.cells_w(), H = fmap.cells_h(), L = W * H, ch = m.channels();
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    out.assign(std::size_t(m.T) * L, kUnplaceableScore);
    for (int t = 0; t < m.T; ++t) {
        const std::vector<double>& w = m.templates[part][t];
        const double bias = m.bias_part[part][t];
        for (int cy = hh; cy < H - hh; ++cy)
            for (int cx = hw; cx < W - hw; ++cx) {
                if (!mask[std::size_t(cy) * W + cx]) continue;
                double s = 0.0;
                std::size_t wi = 0;
                for (int ty = 0; ty < m.template_h; ++ty) {
                    const float* row = fmap.cell(cx - hw, cy + ty - hh);
                    for (int tx = 0; tx < m.template_w; ++tx) {
                        const float* f = row + std::size_t(tx) * ch;
                        for (int c = 0; c < ch; ++c) s += w[wi++] * f[c];
                    }
                }
                out[std::size_t(t) * L + std::size_t(cy) * W + cx] = s + bias;
            }
    }
}

struct EdgeMessage {
    std::vector<double> mu;              // [parent type * L + parent cell]
    std::vector<std::int32_t> arg_cell;  // winning child cell
    std::vector<std::int32_t> arg_type;  // winning child type
};

/// Replaces the stored winner when the candidate scores strictly higher, or
/// ties and precedes it in (row, col, type) order (cell index is row-major,
/// so comparing cells compares (row, col) lexicographically).
inline void update_winner(double val, std::int32_t q_cell, std::int32_t q_type, double& best,
                          std::int32_t& best_cell, std::int32_t& best_type) {
    if (val > best || (val == best && (q_cell < best_cell ||
                                       (q_cell == best_cell && q_type < best_type)))) {
        best = val;
        best_cell = q_cell;
        best_type = q_type;
    }
}

/// Message from child part q to its parent over the image-plane deformation.
/// Uses the distance transform per (child type, parent type) pair whenever
/// the pair's quadratic weights are concave, otherwise a direct scan.
inline EdgeMessage message_psi2d(const PsModel& m, const EdgeParams& e,
                                 const std::vector<double>& total_q, int W, int H,
                                 bool use_gdt) {
    const int L = W * H;
    EdgeMessage msg;
    msg.mu.assign(std::size_t(m.T) * L, -std::numeric_limits<double>::infinity());
    msg.arg_cell.assign(std::size_t(m.T) * L, -1);
    msg.arg_type.assign(std::size_t(m.T) * L, -1);
    std::vector<double> slice(std::size_t(L), 0.0);
    for (int tq = 0; tq < m.T; ++tq) {
        std::copy(total_q.begin() + std::size_t(tq) * L,
                  total_q.begin() + std::size_t(tq + 1) * L, slice.begin());
        for (int tp = 0; tp < m.T; ++tp) {
            const int pair = tq * m.T + tp;
            const std::vector<double>& w = e.w[pair];
            const Anchor& a = e.anchor[pair];
            const double bias = e.bias[pair];
            double* mu = msg.mu.data() + std::size_t(tp) * L;
            std::int32_t* ac = msg.arg_cell.data() + std::size_t(tp) * L;
            std::int32_t* at = msg.arg_type.data() + std::size_t(tp) * L;
            if (use_gdt && w[1] < 0.0 && w[3] < 0.0) {
                const GdtMessage g = gdt_message(slice, W, H, w[0], w[1], w[2], w[3],
                                                 a.ac, a.ar);
                for (int p = 0; p < L; ++p)
                    update_winner(g.value[p] + bias, g.arg[p], tq, mu[p], ac[p], at[p]);
            } else {
                for (int pr = 0; pr < H; ++pr)
                    for (int pc = 0; pc < W; ++pc) {
                        const int p = pr * W + pc;
                        for (int qr = 0; qr < H; ++qr)
                            for (int qc = 0; qc < W; ++qc) {
                                const int q = qr * W + qc;
                                const double dcb = (qc - pc) - a.ac;
                                const double drb = (qr - pr) - a.ar;
                                const double base = slice[q] + w[0] * dcb + w[1] * dcb * dcb +
                                                    w[2] * drb + w[3] * drb * drb;
                                update_winner(base + bias, q, tq, mu[p], ac[p], at[p]);
                            }
                    }
            }
        }
    }
    return msg;
}

/// Message over a 3D deformation variant. Candidates for each parent node
/// come from its neighborhood list plus the node itself when a map is given
/// (the map stores no self-loops); with no map every placeable cell is a
/// candidate, which is the unpruned oracle path.
inline EdgeMessage message_3d(const PsModel& m, const EdgeParams& e,
                              const std::vector<double>& total_q, int W, int H,
                              const StateSpace& ss, const NeighborhoodMap* nmap,
                              const std::vector<char>& mask) {
    const int L = W * H;
    EdgeMessage msg;
    msg.mu.assign(std::size_t(m.T) * L, kUnplaceableScore);
    msg.arg_cell.assign(std::size_t(m.T) * L, -1);
    msg.arg_type.assign(std::size_t(m.T) * L, -1);
    std::vector<std::int32_t> cand;
    std::vector<std::int32_t> all_placeable;
    if (nmap == nullptr) {
        for (int q = 0; q < L; ++q)
            if (mask[q]) all_placeable.push_back(q);
    }
    for (int p = 0; p < L; ++p) {
        if (!mask[p]) continue;
        const StateNode& pn = ss.nodes[p];
        if (nmap != nullptr) {
            cand.clear();
            cand.push_back(std::int32_t(p));  // self-pairing is always in range
            for (const NeighborEntry& ne : nmap->lists[p]) cand.push_back(ne.id);
        }
        const std::vector<std::int32_t>& qs = nmap != nullptr ? cand : all_placeable;
        for (int tp = 0; tp < m.T; ++tp) {
            double* mu = &msg.mu[std::size_t(tp) * L + p];
            std::int32_t* ac = &msg.arg_cell[std::size_t(tp) * L + p];
            std::int32_t* at = &msg.arg_type[std::size_t(tp) * L + p];
            for (const std::int32_t q : qs) {
                const StateNode& qn = ss.nodes[q];
                if (!qn.has3d) continue;
                for (int tq = 0; tq < m.T; ++tq) {
                    const double val = total_q[std::size_t(tq) * L + q] +
                                       edge_pair_score(m, e, tq * m.T + tp, qn, pn);
                    update_winner(val, q, tq, *mu, *ac, *at);
                }
            }
        }
    }
    return msg;
}

struct DpTables {
    int W = 0, H = 0, L = 0;
    std::vector<char> mask;
    std::vector<std::vector<double>> total;  // per part, [type * L + cell]
    std::vector<EdgeMessage> msgs;           // per part id; msgs[0] unused
};

/// Leaf-to-root pass. With naive_oracle the messages use direct scans over
/// every placeable child cell (no transform, no neighborhood pruning).
inline DpTables run_dp(const PsModel& m, const FeatureMap& fmap, const StateSpace& ss,
                       const NeighborhoodMap* nmap, bool use_gdt, bool naive_oracle) {
    if (fmap.channels() != m.channels())
        throw DimensionMismatch("feature map channels do not match the model");
    if (ss.cells_w != fmap.cells_w() || ss.cells_h != fmap.cells_h())
        throw GridMismatch("state space and feature map grids disagree");
    DpTables tab;
    tab.W = fmap.cells_w();
    tab.H = fmap.cells_h();
    tab.L = tab.W * tab.H;
    tab.mask = placeable_mask(m, tab.W, tab.H, ss);
    bool any = false;
    for (const char c : tab.mask) any = any || c;
    if (!any) throw EmptyStateSpace("no cell can host a part at this level");

    tab.total.resize(m.parts());
    tab.msgs.resize(m.parts());
    for (int i = 0; i < m.parts(); ++i) fill_appearance(m, fmap, i, tab.mask, tab.total[i]);

    for (const int q : m.tree.leaf_to_root_order()) {
        if (q == 0) continue;
        const EdgeParams& e = m.edge_to_parent(q);
        if (m.variant == PsiVariant::Psi2D)
            tab.msgs[q] = message_psi2d(m, e, tab.total[q], tab.W, tab.H,
                                        use_gdt && !naive_oracle);
        else
            tab.msgs[q] = message_3d(m, e, tab.total[q], tab.W, tab.H, ss,
                                     naive_oracle ? nullptr : nmap, tab.mask);
        std::vector<double>& parent_total = tab.total[e.parent];
        const std::vector<double>& mu = tab.msgs[q].mu;
        for (std::size_t k = 0; k < parent_total.size(); ++k) parent_total[k] += mu[k];
    }
    return tab;
}

inline PoseDetection backtrace(const PsModel& m, const DpTables& tab, const StateSpace& ss,
                               int root_cell, int root_type, int level, double scale) {
    PoseDetection det;
    det.level = level;
    det.score = tab.total[0][std::size_t(root_type) * tab.L + root_cell];
    det.parts.resize(m.parts());
    std::vector<std::pair<int, int>> stack{{0, std::int32_t(root_type) * tab.L + root_cell}};
    while (!stack.empty()) {
        const auto [part, packed] = stack.back();
        stack.pop_back();
        const int cell = packed % tab.L, type = packed / tab.L;
        const StateNode& n = ss.nodes[cell];
        det.parts[part] = PlacedPart{n.cx, n.cy, type, n.has3d, n.p};
        for (const int child : m.tree.children(part)) {
            const std::size_t at = std::size_t(type) * tab.L + cell;
            stack.push_back({child, int(tab.msgs[child].arg_type[at]) * tab.L +
                                        int(tab.msgs[child].arg_cell[at])});
        }
    }
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (const PlacedPart& p : det.parts) {
        x0 = std::min(x0, double(p.cx - hw) * ss.cell_size);
        y0 = std::min(y0, double(p.cy - hh) * ss.cell_size);
        x1 = std::max(x1, double(p.cx + hw + 1) * ss.cell_size);
        y1 = std::max(y1, double(p.cy + hh + 1) * ss.cell_size);
    }
    det.bbox = BoxF{x0 * scale, y0 * scale, (x1 - x0) * scale, (y1 - y0) * scale};
    return det;
}

inline PoseDetection best_from_tables(const PsModel& m, const DpTables& tab,
                                      const StateSpace& ss, int level, double scale) {
    double best = -std::numeric_limits<double>::infinity();
    int best_cell = -1, best_type = 0;
    for (int cell = 0; cell < tab.L; ++cell) {
        if (!tab.mask[cell]) continue;
        for (int t = 0; t < m.T; ++t) {
            const double s = tab.total[0][std::size_t(t) * tab.L + cell];
            if (s > best) {
                best = s;
                best_cell = cell;
                best_type = t;
            }
        }
    }
    if (best_cell < 0 || best < kInfeasibleScore)
        throw EmptyStateSpace("no feasible configuration exists");
    return backtrace(m, tab, ss, best_cell, best_type, level, scale);
}

}  // namespace detail

/// Exact pruned inference on a single level: thresholded root states are
/// backtraced into detections, ordered by (row, col, type) of the root.
/// 3D variants require a neighborhood map; image-plane models ignore it.
inline std::vector<PoseDetection> dp_infer_level(const PsModel& m, const FeatureMap& fmap,
                                                 const StateSpace& ss,
                                                 const NeighborhoodMap* nmap, double threshold,
                                                 int level = 0, double scale = 1.0,
                                                 bool use_gdt = true) {
    if (psi_needs_depth(m.variant) && m.parts() > 1 && nmap == nullptr)
        throw ConfigInvalid("3D deformation variants need a neighborhood map");
    const detail::DpTables tab = detail::run_dp(m, fmap, ss, nmap, use_gdt, false);
    std::vector<PoseDetection> dets;
    for (int cell = 0; cell < tab.L; ++cell) {
        if (!tab.mask[cell]) continue;
        for (int t = 0; t < m.T; ++t) {
            const double s = tab.total[0][std::size_t(t) * tab.L + cell];
            if (s >= threshold && s > kInfeasibleScore)
                dets.push_back(detail::backtrace(m, tab, ss, cell, t, level, scale));
        }
    }
    return dets;
}

/// Single best configuration under pruned inference (same tables as
/// dp_infer_level, lowest (row, col, type) root on ties).
inline PoseDetection dp_infer_best(const PsModel& m, const FeatureMap& fmap,
                                   const StateSpace& ss, const NeighborhoodMap* nmap,
                                   bool use_gdt = true) {
    if (psi_needs_depth(m.variant) && m.parts() > 1 && nmap == nullptr)
        throw ConfigInvalid("3D deformation variants need a neighborhood map");
    const detail::DpTables tab = detail::run_dp(m, fmap, ss, nmap, use_gdt, false);
    return detail::best_from_tables(m, tab, ss, 0, 1.0);
}

/// Unpruned O(L^2) dynamic programming oracle: direct scans over every
/// placeable child cell, no distance transform, no neighborhood pruning.
inline PoseDetection brute_force_infer(const PsModel& m, const FeatureMap& fmap,
                                       const StateSpace& ss, int budget = 2000) {
    const std::vector<char> mask =
        detail::placeable_mask(m, fmap.cells_w(), fmap.cells_h(), ss);
    int placeable = 0;
    for (const char c : mask) placeable += c;
    if (placeable * m.T > budget)
        throw InstanceTooLarge("state space exceeds the brute-force budget");
    const detail::DpTables tab = detail::run_dp(m, fmap, ss, nullptr, false, true);
    return detail::best_from_tables(m, tab, ss, 0, 1.0);
}

/// Full enumeration over every configuration; only for micro instances.
/// Requires parent ids to precede child ids so that lexicographic
/// enumeration order matches the dynamic-programming tie-break.
inline PoseDetection enumerate_infer(const PsModel& m, const FeatureMap& fmap,
                                     const StateSpace& ss) {
    for (int i = 1; i < m.parts(); ++i)
        if (m.tree.parent(i) >= i)
            throw ConfigInvalid("enumeration requires parent ids below child ids");
    const int W = fmap.cells_w(), H = fmap.cells_h(), L = W * H;
    const std::vector<char> mask = detail::placeable_mask(m, W, H, ss);
    std::vector<int> cells;
    for (int c = 0; c < L; ++c)
        if (mask[c]) cells.push_back(c);
    if (cells.empty()) throw EmptyStateSpace("no cell can host a part");
    if (int(cells.size()) > 8 || m.parts() > 3)
        throw InstanceTooLarge("enumeration limited to 8 cells and 3 parts");

    std::vector<std::vector<double>> f(m.parts());
    for (int i = 0; i < m.parts(); ++i) detail::fill_appearance(m, fmap, i, mask, f[i]);

    const int states = int(cells.size()) * m.T;  // per part, ordered (cell, type)
    std::vector<int> idx(m.parts(), 0);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_idx;
    for (;;) {
        double s = 0.0;
        for (int i = 0; i < m.parts(); ++i)
            s += f[i][std::size_t(idx[i] % m.T) * L + cells[idx[i] / m.T]];
        for (int i = 1; i < m.parts(); ++i) {
            const int pi = m.tree.parent(i);
            s += detail::edge_pair_score(m, m.edge_to_parent(i), (idx[i] % m.T) * m.T +
                                                                     idx[pi] % m.T,
                                         ss.nodes[cells[idx[i] / m.T]],
                                         ss.nodes[cells[idx[pi] / m.T]]);
        }
        if (s > best) {
            best = s;
            best_idx = idx;
        }
        int d = m.parts() - 1;
        while (d >= 0 && ++idx[d] == states) idx[d--] = 0;
        if (d < 0) break;
    }
    if (best < kInfeasibleScore) throw EmptyStateSpace("no feasible configuration exists");

    PoseDetection det;
    det.score = best;
    det.level = 0;
    det.parts.resize(m.parts());
    for (int i = 0; i < m.parts(); ++i) {
        const StateNode& n = ss.nodes[cells[best_idx[i] / m.T]];
        det.parts[i] = PlacedPart{n.cx, n.cy, best_idx[i] % m.T, n.has3d, n.p};
    }
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
    for (const PlacedPart& p : det.parts) {
        x0 = std::min(x0, double(p.cx - hw) * ss.cell_size);
        y0 = std::min(y0, double(p.cy - hh) * ss.cell_size);
        x1 = std::max(x1, double(p.cx + hw + 1) * ss.cell_size);
        y1 = std::max(y1, double(p.cy + hh + 1) * ss.cell_size);
    }
    det.bbox = BoxF{x0, y0, x1 - x0, y1 - y0};
    return det;
}

/// Runs pruned inference over every usable pyramid level and concatenates
/// the thresholded detections (no suppression; see nms).
inline std::vector<PoseDetection> dp_infer(const PsModel& m, const FeaturePyramid& pyr,
                                           const InferenceConfig& cfg = {}) {
    m.validate();
    std::vector<PoseDetection> dets;
    int usable = 0;
    for (int li = 0; li < int(pyr.levels.size()); ++li) {
        const PyramidLevel& lev = pyr.levels[li];
        const int W = lev.features.cells_w(), H = lev.features.cells_h();
        if (W < m.template_w || H < m.template_h) continue;
        const StateSpace ss = build_state_space(W, H, lev.features.cell_size(), lev.depth,
                                                lev.intrinsics);
        const std::vector<char> mask = detail::placeable_mask(m, W, H, ss);
        bool any = false;
        for (const char c : mask) any = any || c;
        if (!any) continue;
        ++usable;
        NeighborhoodMap nmap;
        const NeighborhoodMap* nmap_ptr = nullptr;
        if (psi_needs_depth(m.variant) && m.parts() > 1) {
            nmap = build_neighborhood_map(ss, lev.intrinsics, cfg.max_dist3d, cfg.mode);
            nmap_ptr = &nmap;
        }
        std::vector<PoseDetection> level_dets =
            dp_infer_level(m, lev.features, ss, nmap_ptr, m.detection_threshold, li,
                           lev.scale, cfg.use_gdt);
        dets.insert(dets.end(), level_dets.begin(), level_dets.end());
    }
    if (usable == 0) throw EmptyStateSpace("no pyramid level can host the model");
    return dets;
}

}  // namespace ps3d
