#pragma once

#include <algorithm>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/inference/inference.hpp"

namespace ps3d {

namespace detail {

inline bool detection_before(const PoseDetection& a, const PoseDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
    if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
    if (a.bbox.w != b.bbox.w) return a.bbox.w < b.bbox.w;
    if (a.bbox.h != b.bbox.h) return a.bbox.h < b.bbox.h;
    return a.level < b.level;
}

}  // namespace detail

/// Greedy non-maximum suppression: walk detections by descending score
/// (ties by box position) and drop any whose box overlaps an already kept
/// detection by more than the threshold.
inline std::vector<PoseDetection> nms(std::vector<PoseDetection> dets,
                                      double overlap_threshold = 0.5) {
    std::stable_sort(dets.begin(), dets.end(), detail::detection_before);
    std::vector<PoseDetection> kept;
    for (PoseDetection& d : dets) {
        bool suppressed = false;
        for (const PoseDetection& k : kept)
            if (iou(k.bbox, d.bbox) > overlap_threshold) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(std::move(d));
    }
    return kept;
}

}  // namespace ps3d
