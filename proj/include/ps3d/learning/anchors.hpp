#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ps3d/learning/clustering.hpp"

namespace ps3d {

struct AnchorEstimate {
    std::vector<std::vector<Anchor>> anchors;  // [child-1][t_child * T + t_parent]
    std::vector<std::string> warnings;
};

namespace detail {

struct AnchorAccum {
    double ac = 0, ar = 0;
    long n2d = 0;
    double ax = 0, ay = 0, az = 0, a3d = 0;
    long n3d = 0;

    void add2d(double dc, double dr) {
        ac += dc;
        ar += dr;
        ++n2d;
    }
    void add3d(const Point3D& d) {
        ax += d.x;
        ay += d.y;
        az += d.z;
        a3d += std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
        ++n3d;
    }
};

}  // namespace detail

/// Mean kinematic displacements per edge and type pair: cell-grid offsets
/// (ac, ar), metric offsets (ax, ay, az), and the mean 3D distance a3d.
/// Type pairs with no samples fall back to the edge's type-agnostic mean;
/// 3D fields use only trusted lifts and fall back the same way, staying
/// zero (with a warning) when an edge has no trusted lift at all.
inline AnchorEstimate compute_anchors(const std::vector<TrainingSample>& samples,
                                      const TypeAssignment& assignment, const PartTree& tree,
                                      int T) {
    if (samples.empty()) throw NoValidSamples("no training samples for anchor estimation");
    if (assignment.types.size() != samples.size())
        throw DimensionMismatch("type assignment does not cover the sample set");
    const int parts = tree.size();

    AnchorEstimate out;
    out.anchors.assign(std::size_t(std::max(0, parts - 1)),
                       std::vector<Anchor>(std::size_t(T) * T));
    for (int pi = 1; pi < parts; ++pi) {
        const int pj = tree.parent(pi);
        std::vector<detail::AnchorAccum> pair_acc(std::size_t(T) * T);
        detail::AnchorAccum edge_acc;
        for (std::size_t si = 0; si < samples.size(); ++si) {
            const TrainingSample& s = samples[si];
            const PlacedPart& c = s.parts[std::size_t(pi)];
            const PlacedPart& p = s.parts[std::size_t(pj)];
            const int pair = assignment.types[si][std::size_t(pi)] * T +
                             assignment.types[si][std::size_t(pj)];
            const double dc = c.cx - p.cx, dr = c.cy - p.cy;
            pair_acc[std::size_t(pair)].add2d(dc, dr);
            edge_acc.add2d(dc, dr);
            if (s.trusted3d[std::size_t(pi)] && s.trusted3d[std::size_t(pj)]) {
                const Point3D d{c.p.x - p.p.x, c.p.y - p.p.y, c.p.z - p.p.z};
                pair_acc[std::size_t(pair)].add3d(d);
                edge_acc.add3d(d);
            }
        }
        if (edge_acc.n3d == 0)
            out.warnings.push_back("edge " + tree.part(pi).name + "->" + tree.part(pj).name +
                                   ": no trusted 3D displacement; metric anchors stay zero");
        for (int pair = 0; pair < T * T; ++pair) {
            const detail::AnchorAccum& acc = pair_acc[std::size_t(pair)];
            const detail::AnchorAccum& fb2 = acc.n2d > 0 ? acc : edge_acc;
            const detail::AnchorAccum& fb3 = acc.n3d > 0 ? acc : edge_acc;
            Anchor& a = out.anchors[std::size_t(pi - 1)][std::size_t(pair)];
            if (fb2.n2d > 0) {
                a.ac = fb2.ac / fb2.n2d;
                a.ar = fb2.ar / fb2.n2d;
            }
            if (fb3.n3d > 0) {
                a.ax = fb3.ax / fb3.n3d;
                a.ay = fb3.ay / fb3.n3d;
                a.az = fb3.az / fb3.n3d;
                a.a3d = fb3.a3d / fb3.n3d;
            }
        }
    }
    return out;
}

}  // namespace ps3d
