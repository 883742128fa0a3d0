#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/core/errors.hpp"

namespace ps3d {

/// One estimated pose: joint pixel positions at native resolution plus the
/// box used to associate it with an annotated person.
struct PosePrediction {
    std::array<JointAnnotation, kNumJoints> joints;
    BoxF bbox;
    double score = 0.0;
};

struct PckResult {
    std::array<double, kNumJoints> per_part{};
    std::array<int, kNumJoints> counted{};  // visible-joint samples per part
    double average = 0.0;
    double alpha = 0.2;
    int sample_count = 0;  // persons evaluated
};

namespace detail {

/// Persons pick predictions greedily in annotation order, each taking the
/// unclaimed prediction whose box overlaps theirs the most (ties keep the
/// lower prediction index). Returns -1 for persons left without one.
inline std::vector<int> associate_predictions(const std::vector<PosePrediction>& preds,
                                              const std::vector<PersonAnnotation>& gts) {
    std::vector<int> chosen(gts.size(), -1);
    std::vector<bool> used(preds.size(), false);
    for (std::size_t g = 0; g < gts.size(); ++g) {
        double best = -1.0;
        int pick = -1;
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (used[p]) continue;
            const double overlap = iou(preds[p].bbox, gts[g].bbox);
            if (overlap > best) {
                best = overlap;
                pick = int(p);
            }
        }
        if (pick >= 0) {
            chosen[g] = pick;
            used[std::size_t(pick)] = true;
        }
    }
    return chosen;
}

}  // namespace detail

/// Probability of correct keypoint over a set of frames. A visible joint is
/// correct when its pixel error is at most alpha * max(w, h) of the person's
/// tight box (boundary counts as correct). Persons with six or fewer visible
/// joints are skipped; a person with no associated prediction contributes
/// misses. Parts with no visible samples anywhere are excluded from the
/// average.
inline PckResult pck(const std::vector<std::vector<PosePrediction>>& preds_per_frame,
                     const std::vector<std::vector<PersonAnnotation>>& gts_per_frame,
                     double alpha = 0.2) {
    if (preds_per_frame.size() != gts_per_frame.size())
        throw DimensionMismatch("prediction and ground-truth frame counts differ");
    if (!(alpha > 0.0)) throw ConfigInvalid("pck alpha must be positive");

    PckResult res;
    res.alpha = alpha;
    std::array<int, kNumJoints> correct{};
    for (std::size_t fi = 0; fi < gts_per_frame.size(); ++fi) {
        std::vector<PersonAnnotation> usable;
        for (const PersonAnnotation& a : gts_per_frame[fi])
            if (a.usable_for_pose()) usable.push_back(a);
        if (usable.empty()) continue;
        const std::vector<int> chosen =
            detail::associate_predictions(preds_per_frame[fi], usable);
        for (std::size_t g = 0; g < usable.size(); ++g) {
            const PersonAnnotation& gt = usable[g];
            const double thr = alpha * std::max(gt.bbox.w, gt.bbox.h);
            ++res.sample_count;
            for (int j = 0; j < kNumJoints; ++j) {
                if (!gt.joints[j].visible) continue;
                ++res.counted[j];
                if (chosen[g] < 0) continue;
                const JointAnnotation& pj =
                    preds_per_frame[fi][std::size_t(chosen[g])].joints[j];
                const double du = pj.u - gt.joints[j].u, dv = pj.v - gt.joints[j].v;
                if (std::hypot(du, dv) <= thr) ++correct[j];
            }
        }
    }
    if (res.sample_count == 0) throw NoGroundTruth("no usable annotated person");

    int parts_with_samples = 0;
    double sum = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
        if (res.counted[j] == 0) continue;
        res.per_part[j] = double(correct[j]) / res.counted[j];
        sum += res.per_part[j];
        ++parts_with_samples;
    }
    res.average = sum / parts_with_samples;
    return res;
}

/// Single-frame convenience wrapper.
inline PckResult pck(const std::vector<PosePrediction>& preds,
                     const std::vector<PersonAnnotation>& gts, double alpha = 0.2) {
    return pck(std::vector<std::vector<PosePrediction>>{preds},
               std::vector<std::vector<PersonAnnotation>>{gts}, alpha);
}

/// Difficult-person handling for detection scoring. Normal: detections
/// matched to a difficult person are neither true nor false positives, and
/// undetected difficult persons do not count as misses. NormalPlusDifficult:
/// every person counts.
enum class ApMode { Normal, NormalPlusDifficult };

inline const char* ap_mode_name(ApMode m) {
    return m == ApMode::Normal ? "N" : "N+D";
}

struct DetectionRecord {
    int frame = 0;
    double score = 0.0;
    BoxF bbox;
};

struct GroundTruthBox {
    int frame = 0;
    BoxF bbox;
    bool difficult = false;
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;

    bool operator==(const PrPoint&) const = default;
};

struct ApResult {
    double ap = 0.0;
    std::vector<PrPoint> curve;
    ApMode mode = ApMode::Normal;
};

/// Average precision with greedy box matching. Detections are visited in
/// descending score (ties by frame, then box position) and claim the
/// unclaimed ground truth of their frame with the highest IoU above the
/// threshold, ties going to the lower ground-truth index. AP is the exact
/// area under the stepwise precision-recall curve.
inline ApResult average_precision(std::vector<DetectionRecord> detections,
                                  const std::vector<GroundTruthBox>& ground_truth,
                                  double iou_threshold = 0.5,
                                  ApMode mode = ApMode::Normal) {
    int relevant = 0;
    for (const GroundTruthBox& g : ground_truth)
        relevant += (mode == ApMode::NormalPlusDifficult || !g.difficult) ? 1 : 0;
    if (relevant == 0)
        throw NoGroundTruth("no ground-truth box counts under this mode");

    std::stable_sort(detections.begin(), detections.end(),
                     [](const DetectionRecord& a, const DetectionRecord& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.frame != b.frame) return a.frame < b.frame;
                         if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
                         return a.bbox.y < b.bbox.y;
                     });

    ApResult res;
    res.mode = mode;
    std::vector<bool> claimed(ground_truth.size(), false);
    int tp = 0, fp = 0;
    double prev_recall = 0.0;
    for (const DetectionRecord& d : detections) {
        double best = iou_threshold;
        int match = -1;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (claimed[g] || ground_truth[g].frame != d.frame) continue;
            const double overlap = iou(d.bbox, ground_truth[g].bbox);
            if (overlap > best) {
                best = overlap;
                match = int(g);
            }
        }
        if (match >= 0) {
            claimed[std::size_t(match)] = true;
            if (mode == ApMode::Normal && ground_truth[std::size_t(match)].difficult)
                continue;  // ignored: neither true nor false positive
            ++tp;
        } else {
            ++fp;
        }
        const double recall = double(tp) / relevant;
        const double precision = double(tp) / (tp + fp);
        res.curve.push_back(PrPoint{recall, precision});
        res.ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return res;
}

inline std::vector<PrPoint> precision_recall_curve(
    const std::vector<DetectionRecord>& detections,
    const std::vector<GroundTruthBox>& ground_truth, double iou_threshold = 0.5,
    ApMode mode = ApMode::Normal) {
    return average_precision(detections, ground_truth, iou_threshold, mode).curve;
}

}  // namespace ps3d
