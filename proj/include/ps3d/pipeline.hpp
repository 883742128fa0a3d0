#pragma once

#include <algorithm>
#include <vector>

#include "ps3d/features/pyramid.hpp"
#include "ps3d/inference/inference.hpp"
#include "ps3d/inference/nms.hpp"

namespace ps3d {

/// End-to-end detection settings: pyramid shape, pruning, suppression.
struct DetectConfig {
    double scale_step = 1.2;
    int min_level_size = 0;  // 0 means three cells at the model's cell size
    int max_levels = 32;
    InferenceConfig inference;
    double nms_overlap = 0.5;
    int max_poses = 0;     // 0 keeps every detection that survives suppression
    int pre_nms_cap = 0;   // 0 is unlimited; otherwise only the top scorers
                           // per frame enter the quadratic suppression pass

    int effective_min_level(const PsModel& m) const {
        return min_level_size > 0 ? min_level_size : 3 * m.descriptors.cell_size;
    }
};

namespace detail {

inline std::vector<PoseDetection> suppress(std::vector<PoseDetection> dets,
                                           const DetectConfig& cfg) {
    if (cfg.pre_nms_cap > 0 && int(dets.size()) > cfg.pre_nms_cap) {
        std::stable_sort(dets.begin(), dets.end(), detection_before);
        dets.resize(std::size_t(cfg.pre_nms_cap));
    }
    return nms(std::move(dets), cfg.nms_overlap);
}

}  // namespace detail

/// Frame in, suppressed pose detections out: feature pyramid, pruned
/// inference on every usable level, then greedy box suppression.
inline std::vector<PoseDetection> detect_poses(const PsModel& m, const RgbdFrame& frame,
                                               const DetectConfig& cfg = {}) {
    const FeaturePyramid pyr =
        build_pyramid(frame, m.descriptors, cfg.scale_step, cfg.effective_min_level(m),
                      cfg.max_levels);
    std::vector<PoseDetection> dets = detail::suppress(dp_infer(m, pyr, cfg.inference), cfg);
    if (cfg.max_poses > 0 && int(dets.size()) > cfg.max_poses) dets.resize(cfg.max_poses);
    return dets;
}

}  // namespace ps3d
