#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ps3d/core/frame.hpp"
#include "ps3d/features/pyramid.hpp"
#include "ps3d/inference/neighborhood.hpp"
#include "ps3d/inference/state_space.hpp"
#include "ps3d/model/model.hpp"

namespace ps3d {

/// How annotated poses are turned into grid-level training samples.
struct SampleConfig {
    DescriptorConfig descriptors;
    int template_w = 5;
    int template_h = 5;
    double scale_step = 1.2;
    int min_level_size = 0;  // 0 means three cells at the descriptor cell size
    int max_levels = 32;
    /// Target shoulder-to-hip extent, in cells, at the level a sample snaps
    /// to; the model is trained at this canonical scale.
    double canonical_extent_cells = 3.0;
    double max_dist3d = 0.9;  // cached neighborhood maps for 3D variants
    NeighborhoodMode prune_mode = NeighborhoodMode::Paper;

    int effective_min_level() const {
        return min_level_size > 0 ? min_level_size : 3 * descriptors.cell_size;
    }

    void validate() const {
        descriptors.validate();
        if (template_w < 1 || template_h < 1 || template_w % 2 == 0 || template_h % 2 == 0)
            throw ConfigInvalid("template dims must be positive and odd");
        if (scale_step <= 1.0) throw ConfigInvalid("pyramid scale step must exceed 1");
        if (canonical_extent_cells <= 0.0) throw ConfigInvalid("canonical extent must be positive");
        if (max_dist3d <= 0.0) throw ConfigInvalid("3D distance cap must be positive");
    }
};

/// One annotated pose snapped to a pyramid level: per-part cell placements
/// with the level's 3D lifts, plus shared handles on that level's features.
/// `trusted3d` marks parts whose lift comes from the person itself (joint
/// visible); parts over occluders or holes keep the node lift for scoring
/// consistency with inference but are excluded from anchor statistics.
struct TrainingSample {
    int frame = -1;  // index into the positive frame list
    int level = 0;
    double scale = 1.0;
    std::vector<PlacedPart> parts;
    std::vector<char> trusted3d;
    PersonAnnotation annotation;  // native-resolution ground truth
    std::shared_ptr<const FeatureMap> features;
    std::shared_ptr<const StateSpace> space;
    std::shared_ptr<const NeighborhoodMap> neighborhood;  // null for 2D-only use

    bool fully_lifted() const {
        for (const PlacedPart& p : parts)
            if (!p.has3d) return false;
        return true;
    }
};

struct DerivedSamples {
    std::vector<TrainingSample> samples;
    std::vector<std::string> warnings;
};

namespace detail {

/// Maps tree parts onto annotation joints by part name.
inline std::vector<int> part_joint_map(const PartTree& tree) {
    std::vector<int> map(std::size_t(tree.size()));
    for (int i = 0; i < tree.size(); ++i)
        map[std::size_t(i)] = int(joint_from_name(tree.part(i).name));
    return map;
}

inline double shoulder_hip_extent_px(const PersonAnnotation& a) {
    auto dist = [&](Joint p, Joint q) {
        const JointAnnotation& jp = a.joints[int(p)];
        const JointAnnotation& jq = a.joints[int(q)];
        return std::hypot(jp.u - jq.u, jp.v - jq.v);
    };
    return 0.5 * (dist(Joint::LeftShoulder, Joint::LeftHip) +
                  dist(Joint::RightShoulder, Joint::RightHip));
}

}  // namespace detail

/// Derives grid-level samples for every pose annotation with at least seven
/// visible joints. Each sample snaps to the pyramid level where the
/// annotated shoulder-to-hip extent is closest to the canonical training
/// scale, then takes the nearest template-interior cell per part.
inline DerivedSamples derive_training_samples(const std::vector<RgbdFrame>& frames,
                                              const PartTree& tree, const SampleConfig& cfg,
                                              bool build_neighborhoods = false) {
    cfg.validate();
    tree.validate();
    const std::vector<int> joint_of = detail::part_joint_map(tree);
    const int hw = cfg.template_w / 2, hh = cfg.template_h / 2;
    const double target_px = cfg.canonical_extent_cells * cfg.descriptors.cell_size;

    DerivedSamples out;
    for (int fi = 0; fi < int(frames.size()); ++fi) {
        const RgbdFrame& frame = frames[fi];
        frame.validate();
        bool any_usable = false;
        for (const PersonAnnotation& a : frame.annotations) any_usable |= a.usable_for_pose();
        if (!any_usable) continue;

        const FeaturePyramid pyr = build_pyramid(frame, cfg.descriptors, cfg.scale_step,
                                                 cfg.effective_min_level(), cfg.max_levels);
        // levels are materialized lazily and shared between persons
        std::map<int, std::shared_ptr<const FeatureMap>> fmaps;
        std::map<int, std::shared_ptr<const StateSpace>> spaces;
        std::map<int, std::shared_ptr<const NeighborhoodMap>> nmaps;

        for (const PersonAnnotation& a : frame.annotations) {
            if (!a.usable_for_pose()) continue;
            const double extent = detail::shoulder_hip_extent_px(a);
            int best_level = -1;
            double best_gap = 0.0;
            for (int li = 0; li < int(pyr.levels.size()); ++li) {
                const PyramidLevel& lev = pyr.levels[li];
                if (lev.features.cells_w() < cfg.template_w ||
                    lev.features.cells_h() < cfg.template_h)
                    continue;
                const double gap = std::abs(extent / lev.scale - target_px);
                if (best_level < 0 || gap < best_gap) {
                    best_level = li;
                    best_gap = gap;
                }
            }
            if (best_level < 0) {
                out.warnings.push_back("frame " + std::to_string(fi) +
                                       ": no pyramid level can host the template");
                continue;
            }
            const PyramidLevel& lev = pyr.levels[best_level];
            if (!spaces.count(best_level)) {
                spaces[best_level] = std::make_shared<StateSpace>(build_state_space(
                    lev.features.cells_w(), lev.features.cells_h(), lev.features.cell_size(),
                    lev.depth, lev.intrinsics));
                fmaps[best_level] = std::make_shared<FeatureMap>(lev.features);
                if (build_neighborhoods)
                    nmaps[best_level] = std::make_shared<NeighborhoodMap>(build_neighborhood_map(
                        *spaces[best_level], lev.intrinsics, cfg.max_dist3d, cfg.prune_mode));
            }
            const StateSpace& ss = *spaces[best_level];

            TrainingSample s;
            s.frame = fi;
            s.level = best_level;
            s.scale = lev.scale;
            s.annotation = a;
            s.features = fmaps[best_level];
            s.space = spaces[best_level];
            if (build_neighborhoods) s.neighborhood = nmaps[best_level];
            s.parts.resize(joint_of.size());
            s.trusted3d.assign(joint_of.size(), 0);
            for (std::size_t pi = 0; pi < joint_of.size(); ++pi) {
                const JointAnnotation& j = a.joints[std::size_t(joint_of[pi])];
                const int cell = lev.features.cell_size();
                int cx = int(std::floor(j.u / lev.scale / cell));
                int cy = int(std::floor(j.v / lev.scale / cell));
                cx = std::max(hw, std::min(ss.cells_w - 1 - hw, cx));
                cy = std::max(hh, std::min(ss.cells_h - 1 - hh, cy));
                const StateNode& node = ss.node(cx, cy);
                s.parts[pi] = PlacedPart{cx, cy, 0, node.has3d, node.p};
                s.trusted3d[pi] = node.has3d && j.visible ? 1 : 0;
            }
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace ps3d
