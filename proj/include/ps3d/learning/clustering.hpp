#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ps3d/core/rng.hpp"
#include "ps3d/learning/samples.hpp"

namespace ps3d {

/// Space the per-part displacement clustering runs in: the level cell grid
/// or metric camera coordinates.
enum class ClusterMode { Pixels2D, Meters3D };

inline const char* cluster_mode_name(ClusterMode m) {
    return m == ClusterMode::Pixels2D ? "2d" : "3d";
}

inline ClusterMode cluster_mode_from_name(const std::string& s) {
    if (s == "2d") return ClusterMode::Pixels2D;
    if (s == "3d") return ClusterMode::Meters3D;
    throw ConfigInvalid("unknown cluster mode name: " + s);
}

/// Per-sample, per-part mixture type ids, dense in 0..type_count[part]-1.
struct TypeAssignment {
    std::vector<std::vector<int>> types;  // [sample][part]
    std::vector<int> type_count;          // [part]
    std::vector<std::string> warnings;
};

namespace detail {

struct KmPoint {
    std::array<double, 3> x{};
    int dims = 2;
};

inline double km_dist2(const KmPoint& a, const std::array<double, 3>& c) {
    double d = 0.0;
    for (int k = 0; k < a.dims; ++k) d += (a.x[k] - c[k]) * (a.x[k] - c[k]);
    return d;
}

/// Plain seeded k-means (k-means++ init, Lloyd iterations, empty clusters
/// dropped). Returns per-point cluster ids; ids are renumbered so that
/// cluster centers are in lexicographic order, making the labeling a pure
/// function of the seed and the data.
inline std::vector<int> kmeans(const std::vector<KmPoint>& pts, int k, Rng& rng,
                               int* k_out = nullptr) {
    const int n = int(pts.size());
    k = std::min(k, n);
    std::vector<std::array<double, 3>> centers;
    // k-means++ seeding
    centers.push_back(pts[std::size_t(rng.uniform_int(0, n - 1))].x);
    std::vector<double> d2(std::size_t(n), 0.0);
    while (int(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, km_dist2(pts[i], c));
            d2[std::size_t(i)] = best;
            total += best;
        }
        if (total <= 0.0) break;  // fewer distinct points than clusters
        double pick = rng.uniform01() * total;
        int chosen = n - 1;
        for (int i = 0; i < n; ++i) {
            pick -= d2[std::size_t(i)];
            if (pick <= 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(pts[std::size_t(chosen)].x);
    }

    std::vector<int> assign(std::size_t(n), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = km_dist2(pts[i], centers[0]);
            for (int c = 1; c < int(centers.size()); ++c) {
                const double d = km_dist2(pts[i], centers[std::size_t(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[std::size_t(i)] != best) {
                assign[std::size_t(i)] = best;
                changed = true;
            }
        }
        // recompute means; drop clusters that lost every point
        std::vector<std::array<double, 3>> sums(centers.size(), {0.0, 0.0, 0.0});
        std::vector<int> counts(centers.size(), 0);
        for (int i = 0; i < n; ++i) {
            for (int d = 0; d < 3; ++d) sums[std::size_t(assign[std::size_t(i)])][d] += pts[i].x[d];
            ++counts[std::size_t(assign[std::size_t(i)])];
        }
        std::vector<int> remap(centers.size(), -1);
        std::vector<std::array<double, 3>> next;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] == 0) continue;
            remap[c] = int(next.size());
            next.push_back({sums[c][0] / counts[c], sums[c][1] / counts[c],
                            sums[c][2] / counts[c]});
        }
        for (int& a : assign) a = remap[std::size_t(a)];
        const bool dropped = next.size() != centers.size();
        centers = std::move(next);
        if (!changed && !dropped) break;
    }

    // stable naming: order clusters by center coordinates
    std::vector<int> order(centers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return centers[std::size_t(a)] < centers[std::size_t(b)];
    });
    std::vector<int> rank(centers.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[std::size_t(order[i])] = int(i);
    for (int& a : assign) a = rank[std::size_t(a)];
    if (k_out) *k_out = int(centers.size());
    return assign;
}

}  // namespace detail

/// Clusters each part's displacement relative to its parent into at most T
/// mixture types (k-means, seeded). The root has no displacement and always
/// gets a single type. In 3D mode, samples without trusted lifts on both
/// ends of an edge are assigned afterward to the cluster whose members'
/// mean cell displacement is nearest.
inline TypeAssignment cluster_part_types(const std::vector<TrainingSample>& samples,
                                         const PartTree& tree, int T, ClusterMode mode,
                                         std::uint64_t seed) {
    if (samples.empty()) throw InsufficientSamples("no training samples to cluster");
    if (T < 1) throw ConfigInvalid("mixture count must be positive");
    const int n = int(samples.size());
    const int parts = tree.size();
    for (const TrainingSample& s : samples)
        if (int(s.parts.size()) != parts)
            throw DimensionMismatch("sample part count disagrees with the tree");

    TypeAssignment out;
    out.types.assign(std::size_t(n), std::vector<int>(std::size_t(parts), 0));
    out.type_count.assign(std::size_t(parts), 1);
    if (T > n)
        out.warnings.push_back("mixture count " + std::to_string(T) + " exceeds the " +
                               std::to_string(n) + " available samples; reduced");

    for (int pi = 1; pi < parts; ++pi) {
        const int pj = tree.parent(pi);
        std::vector<detail::KmPoint> pts;
        std::vector<int> rows;  // sample index per point
        for (int si = 0; si < n; ++si) {
            const TrainingSample& s = samples[std::size_t(si)];
            detail::KmPoint p;
            if (mode == ClusterMode::Pixels2D) {
                p.dims = 2;
                p.x = {double(s.parts[std::size_t(pi)].cx - s.parts[std::size_t(pj)].cx),
                       double(s.parts[std::size_t(pi)].cy - s.parts[std::size_t(pj)].cy), 0.0};
            } else {
                if (!s.trusted3d[std::size_t(pi)] || !s.trusted3d[std::size_t(pj)]) continue;
                p.dims = 3;
                p.x = {s.parts[std::size_t(pi)].p.x - s.parts[std::size_t(pj)].p.x,
                       s.parts[std::size_t(pi)].p.y - s.parts[std::size_t(pj)].p.y,
                       s.parts[std::size_t(pi)].p.z - s.parts[std::size_t(pj)].p.z};
            }
            pts.push_back(p);
            rows.push_back(si);
        }
        if (pts.empty()) {
            out.warnings.push_back("part " + tree.part(pi).name +
                                   ": no usable displacements; all samples type 0");
            continue;
        }
        Rng rng(seed + std::uint64_t(pi) * 0x9e3779b97f4a7c15ULL);
        int k = 0;
        const std::vector<int> assign = detail::kmeans(pts, T, rng, &k);
        out.type_count[std::size_t(pi)] = k;
        if (k < T && int(pts.size()) >= T)
            out.warnings.push_back("part " + tree.part(pi).name + ": only " +
                                   std::to_string(k) + " distinct displacement clusters");
        for (std::size_t i = 0; i < rows.size(); ++i)
            out.types[std::size_t(rows[i])][std::size_t(pi)] = assign[i];

        if (int(rows.size()) < n) {
            // 3D mode with partially lifted samples: fall back on the cell
            // displacement against each cluster's mean cell displacement
            std::vector<std::array<double, 2>> mean(std::size_t(k), {0.0, 0.0});
            std::vector<int> cnt(std::size_t(k), 0);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const TrainingSample& s = samples[std::size_t(rows[i])];
                mean[std::size_t(assign[i])][0] +=
                    s.parts[std::size_t(pi)].cx - s.parts[std::size_t(pj)].cx;
                mean[std::size_t(assign[i])][1] +=
                    s.parts[std::size_t(pi)].cy - s.parts[std::size_t(pj)].cy;
                ++cnt[std::size_t(assign[i])];
            }
            for (int c = 0; c < k; ++c)
                if (cnt[std::size_t(c)] > 0) {
                    mean[std::size_t(c)][0] /= cnt[std::size_t(c)];
                    mean[std::size_t(c)][1] /= cnt[std::size_t(c)];
                }
            std::vector<char> covered(std::size_t(n), 0);
            for (const int r : rows) covered[std::size_t(r)] = 1;
            for (int si = 0; si < n; ++si) {
                if (covered[std::size_t(si)]) continue;
                const TrainingSample& s = samples[std::size_t(si)];
                const double dc = s.parts[std::size_t(pi)].cx - s.parts[std::size_t(pj)].cx;
                const double dr = s.parts[std::size_t(pi)].cy - s.parts[std::size_t(pj)].cy;
                int best = 0;
                double bd = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double d = (dc - mean[std::size_t(c)][0]) * (dc - mean[std::size_t(c)][0]) +
                                     (dr - mean[std::size_t(c)][1]) * (dr - mean[std::size_t(c)][1]);
                    if (d < bd) {
                        bd = d;
                        best = c;
                    }
                }
                out.types[std::size_t(si)][std::size_t(pi)] = best;
            }
        }
    }
    return out;
}

}  // namespace ps3d
