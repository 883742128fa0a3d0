#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ps3d/learning/anchors.hpp"
#include "ps3d/learning/clustering.hpp"
#include "ps3d/learning/samples.hpp"
#include "ps3d/pipeline.hpp"

namespace ps3d {

/// Structured-margin training settings. The objective is
///   0.5 ||w||^2 + C * (sum_pos hinge(1 - s) + sum_neg hinge(1 + s)),
/// minimized by stochastic subgradient steps with per-epoch hard-negative
/// mining; an epoch that raises the objective on its working set is rolled
/// back and the step size halved, so the per-set loss trace never rises.
struct TrainConfig {
    PartTree tree = upper_body_tree();
    PsiVariant variant = PsiVariant::Psi2D;
    Psi3d4Distance psi4_distance = Psi3d4Distance::AnchorRelative;
    SampleConfig sample;

    int T = 6;
    ClusterMode cluster_mode = ClusterMode::Pixels2D;

    double C = 1.0;          // hinge weight against the L2 regularizer
    int epochs = 30;
    double lr0 = 0.05;       // step size: lr0 / (1 + lr_decay * epoch)
    double lr_decay = 0.15;
    int mining_rounds = 4;
    int negatives_per_round = 200;
    double holdout_fraction = 0.25;  // tail frames reserved for calibration
    double nms_overlap = 0.5;
    std::uint64_t seed = 1;

    void validate() const {
        tree.validate();
        sample.validate();
        if (T < 1) throw ConfigInvalid("mixture count must be positive");
        if (!(C > 0.0)) throw ConfigInvalid("hinge weight C must be positive");
        if (epochs < 0) throw ConfigInvalid("negative epoch count");
        if (!(lr0 > 0.0) || lr_decay < 0.0) throw ConfigInvalid("bad learning-rate schedule");
        if (mining_rounds < 0 || negatives_per_round < 0)
            throw ConfigInvalid("negative mining settings");
        if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
            throw ConfigInvalid("holdout fraction outside [0, 1)");
        if (nms_overlap <= 0.0 || nms_overlap >= 1.0)
            throw ConfigInvalid("suppression overlap outside (0, 1)");
    }
};

/// One mined negative: a part configuration on a human-free frame together
/// with the feature level it scored on.
struct NegativeSample {
    int frame = -1;
    int level = 0;
    double score = 0.0;  // model score at mining time
    std::vector<PlacedPart> parts;
    std::shared_ptr<const FeatureMap> features;
};

struct EpochStats {
    int epoch = 0;
    double objective = 0.0;
    double train_pck = -1.0;  // -1 when the tree has no full joint mapping
    int mined_negatives = 0;  // pool size during this epoch
    double learning_rate = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    std::vector<std::string> warnings;
    double initial_objective = 0.0;  // on the final working set, zero weights
    double final_objective = 0.0;    // on the final working set
    double calibrated_threshold = 0.0;
    int positive_count = 0;
    int holdout_positive_frames = 0;
    int holdout_negative_frames = 0;
};

namespace detail {

/// Applies f to every learned parameter (templates, biases, deformation
/// weights); anchors and the detection threshold are estimated, not learned.
template <typename F>
inline void for_each_weight(PsModel& m, F&& f) {
    for (auto& part : m.templates)
        for (auto& tpl : part)
            for (double& v : tpl) f(v);
    for (auto& biases : m.bias_part)
        for (double& v : biases) f(v);
    for (EdgeParams& e : m.edges) {
        for (auto& w : e.w)
            for (double& v : w) f(v);
        for (double& v : e.bias) f(v);
    }
}

inline double weight_norm_sq(const PsModel& m) {
    double sq = 0.0;
    for_each_weight(const_cast<PsModel&>(m), [&](double& v) { sq += v * v; });
    return sq;
}

inline void clamp_squared_weights(PsModel& m) {
    const std::vector<int> idx = psi_squared_indices(m.variant);
    for (EdgeParams& e : m.edges)
        for (auto& w : e.w)
            for (const int i : idx) w[std::size_t(i)] = std::min(w[std::size_t(i)], -0.001);
}

/// w += coef * Phi(configuration): template windows, part biases, psi
/// features, edge biases. Mirrors score_configuration exactly.
inline void add_configuration(PsModel& m, const FeatureMap& fmap,
                              const std::vector<PlacedPart>& st, double coef) {
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    const int ch = m.channels();
    for (int i = 0; i < m.parts(); ++i) {
        std::vector<double>& w = m.templates[std::size_t(i)][std::size_t(st[std::size_t(i)].type)];
        std::size_t wi = 0;
        for (int ty = 0; ty < m.template_h; ++ty)
            for (int tx = 0; tx < m.template_w; ++tx) {
                const float* f = fmap.cell(st[std::size_t(i)].cx + tx - hw,
                                           st[std::size_t(i)].cy + ty - hh);
                for (int c = 0; c < ch; ++c) w[wi++] += coef * f[c];
            }
        m.bias_part[std::size_t(i)][std::size_t(st[std::size_t(i)].type)] += coef;
    }
    for (int i = 1; i < m.parts(); ++i) {
        EdgeParams& e = m.edge_to_parent(i);
        const PlacedPart& c = st[std::size_t(i)];
        const PlacedPart& p = st[std::size_t(m.tree.parent(i))];
        const int pair = c.type * m.T + p.type;
        const std::vector<double> psi = psi_features(m, e.anchor[std::size_t(pair)], c, p);
        std::vector<double>& w = e.w[std::size_t(pair)];
        for (std::size_t k = 0; k < psi.size(); ++k) w[k] += coef * psi[k];
        e.bias[std::size_t(pair)] += coef;
    }
}

/// Content identity of a configuration: types, window features, deformation
/// features. Two placements with equal fingerprints contribute identical
/// gradients, wherever they sit.
inline std::vector<double> config_fingerprint(const PsModel& m, const FeatureMap& fmap,
                                              const std::vector<PlacedPart>& st) {
    std::vector<double> fp;
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    for (int i = 0; i < m.parts(); ++i) {
        fp.push_back(double(st[std::size_t(i)].type));
        for (int ty = 0; ty < m.template_h; ++ty)
            for (int tx = 0; tx < m.template_w; ++tx) {
                const float* f = fmap.cell(st[std::size_t(i)].cx + tx - hw,
                                           st[std::size_t(i)].cy + ty - hh);
                for (int c = 0; c < m.channels(); ++c) fp.push_back(double(f[c]));
            }
    }
    for (int i = 1; i < m.parts(); ++i) {
        const EdgeParams& e = m.edge_to_parent(i);
        const PlacedPart& c = st[std::size_t(i)];
        const PlacedPart& p = st[std::size_t(m.tree.parent(i))];
        const int pair = c.type * m.T + p.type;
        fp.push_back(double(pair));
        for (const double v : psi_features(m, e.anchor[std::size_t(pair)], c, p))
            fp.push_back(v);
    }
    return fp;
}

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

inline double objective(const PsModel& m, double C, const std::vector<TrainingSample>& pos,
                        const std::vector<NegativeSample>& neg) {
    double loss = 0.5 * weight_norm_sq(m);
    for (const TrainingSample& s : pos)
        loss += C * hinge(1.0 - score_configuration(m, *s.features, s.parts));
    for (const NegativeSample& s : neg)
        loss += C * hinge(1.0 + score_configuration(m, *s.features, s.parts));
    return loss;
}

/// Fraction of annotated visible joints placed within 0.2 * max(w, h) by
/// the best single-level configuration for each sample.
inline double train_pck(const PsModel& m, const std::vector<TrainingSample>& pos,
                        const std::map<const StateSpace*, std::shared_ptr<const NeighborhoodMap>>&
                            nmaps) {
    if (m.parts() != kNumJoints) return -1.0;
    long correct = 0, total = 0;
    for (const TrainingSample& s : pos) {
        const NeighborhoodMap* nm = nullptr;
        if (psi_needs_depth(m.variant)) {
            const auto it = nmaps.find(s.space.get());
            if (it == nmaps.end()) continue;
            nm = it->second.get();
        }
        PoseDetection det;
        try {
            det = dp_infer_best(m, *s.features, *s.space, nm);
        } catch (const EmptyStateSpace&) {
            continue;
        }
        const double thr =
            0.2 * std::max(s.annotation.bbox.w, s.annotation.bbox.h);
        for (int j = 0; j < kNumJoints; ++j) {
            if (!s.annotation.joints[std::size_t(j)].visible) continue;
            ++total;
            const StateNode& node = s.space->node(det.parts[std::size_t(j)].cx,
                                                  det.parts[std::size_t(j)].cy);
            const double du = node.px * s.scale - s.annotation.joints[std::size_t(j)].u;
            const double dv = node.py * s.scale - s.annotation.joints[std::size_t(j)].v;
            if (std::hypot(du, dv) <= thr) ++correct;
        }
    }
    return total > 0 ? double(correct) / double(total) : -1.0;
}

}  // namespace detail

/// Top-scoring detections on human-free frames: margin violations that the
/// next epochs must push back below -1. Per-frame suppression first, then a
/// global cut at `budget`, ordered by score (ties by frame, then box).
inline std::vector<NegativeSample> mine_hard_negatives(const PsModel& m,
                                                       const std::vector<RgbdFrame>& frames,
                                                       int budget, const DetectConfig& cfg = {}) {
    std::vector<NegativeSample> out;
    if (budget <= 0 || frames.empty()) return out;
    PsModel probe = m;
    probe.detection_threshold = -1.0;  // the negative margin boundary
    for (int fi = 0; fi < int(frames.size()); ++fi) {
        FeaturePyramid pyr;
        try {
            pyr = build_pyramid(frames[std::size_t(fi)], m.descriptors, cfg.scale_step,
                                cfg.effective_min_level(m), cfg.max_levels);
        } catch (const ImageTooSmall&) {
            continue;
        }
        std::vector<PoseDetection> dets;
        try {
            DetectConfig capped = cfg;
            if (capped.pre_nms_cap <= 0) capped.pre_nms_cap = std::max(2000, budget * 4);
            dets = detail::suppress(dp_infer(probe, pyr, cfg.inference), capped);
        } catch (const EmptyStateSpace&) {
            continue;
        }
        std::map<int, std::shared_ptr<const FeatureMap>> levels;
        for (PoseDetection& d : dets) {
            auto it = levels.find(d.level);
            if (it == levels.end())
                it = levels
                         .emplace(d.level, std::make_shared<FeatureMap>(
                                               pyr.levels[std::size_t(d.level)].features))
                         .first;
            NegativeSample ns;
            ns.frame = fi;
            ns.level = d.level;
            ns.score = d.score;
            ns.parts = std::move(d.parts);
            ns.features = it->second;
            out.push_back(std::move(ns));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const NegativeSample& a, const NegativeSample& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.frame != b.frame) return a.frame < b.frame;
        if (a.level != b.level) return a.level < b.level;
        return a.parts[0].cy != b.parts[0].cy ? a.parts[0].cy < b.parts[0].cy
                                              : a.parts[0].cx < b.parts[0].cx;
    });
    if (int(out.size()) > budget) out.resize(std::size_t(budget));
    return out;
}

/// Structured-margin training: cluster types, estimate anchors, then push
/// annotated configurations above +1 and mined negatives below -1 with
/// stochastic subgradient steps. Squared-deformation weights are clamped to
/// at most -0.001 after every update, and the detection threshold is
/// calibrated to maximum F1 on held-out frames.
inline PsModel train_ssvm(const std::vector<TrainingSample>& all_samples,
                          const std::vector<RgbdFrame>& positive_frames,
                          const std::vector<RgbdFrame>& negative_frames,
                          const TrainConfig& cfg, TrainLog* log_out = nullptr) {
    cfg.validate();
    if (all_samples.empty()) throw ConfigInvalid("training needs at least one positive sample");
    if (negative_frames.empty() && cfg.mining_rounds > 0 && cfg.negatives_per_round > 0)
        throw ConfigInvalid("training needs human-free frames for negative mining");

    TrainLog log;

    // frame-tail holdout for threshold calibration
    const int pos_cut = int(positive_frames.size()) -
                        int(std::lround(cfg.holdout_fraction * double(positive_frames.size())));
    const int neg_cut = int(negative_frames.size()) -
                        int(std::lround(cfg.holdout_fraction * double(negative_frames.size())));
    std::vector<TrainingSample> samples;
    for (const TrainingSample& s : all_samples)
        if (s.frame < pos_cut) samples.push_back(s);
    if (samples.empty()) {
        log.warnings.push_back("holdout would consume every sample; training on all of them");
        samples = all_samples;
    }
    std::vector<RgbdFrame> mining_negatives(negative_frames.begin(),
                                            negative_frames.begin() + neg_cut);
    log.holdout_positive_frames = int(positive_frames.size()) - pos_cut;
    log.holdout_negative_frames = int(negative_frames.size()) - neg_cut;

    // types and anchors come from sample statistics, not gradient steps
    const TypeAssignment assignment =
        cluster_part_types(samples, cfg.tree, cfg.T, cfg.cluster_mode, cfg.seed);
    AnchorEstimate anchors = compute_anchors(samples, assignment, cfg.tree, cfg.T);
    for (const std::string& w : assignment.warnings) log.warnings.push_back(w);
    for (const std::string& w : anchors.warnings) log.warnings.push_back(w);

    PsModel m = make_zero_model(cfg.tree, cfg.T, cfg.sample.template_w, cfg.sample.template_h,
                                cfg.variant, cfg.sample.descriptors);
    m.psi4_distance = cfg.psi4_distance;
    for (int i = 1; i < m.parts(); ++i)
        m.edge_to_parent(i).anchor = std::move(anchors.anchors[std::size_t(i - 1)]);
    detail::clamp_squared_weights(m);

    for (std::size_t si = 0; si < samples.size(); ++si)
        for (std::size_t pi = 0; pi < samples[si].parts.size(); ++pi)
            samples[si].parts[pi].type = assignment.types[si][pi];

    // 3D variants can only fit samples whose every part carries a lift
    if (psi_needs_depth(cfg.variant)) {
        std::vector<TrainingSample> lifted;
        for (const TrainingSample& s : samples)
            if (s.fully_lifted()) lifted.push_back(s);
        if (lifted.empty())
            throw NoValidSamples("no sample lifts every part into 3D; cannot fit a 3D variant");
        if (lifted.size() < samples.size())
            log.warnings.push_back(std::to_string(samples.size() - lifted.size()) +
                                   " samples lack full 3D lifts and were dropped");
        samples = std::move(lifted);
    }
    log.positive_count = int(samples.size());

    if (cfg.epochs == 0) {
        if (log_out) *log_out = log;
        m.validate();
        return m;  // initialization: anchors, clamped squared weights, zero elsewhere
    }

    DetectConfig dcfg;
    dcfg.scale_step = cfg.sample.scale_step;
    dcfg.min_level_size = cfg.sample.effective_min_level();
    dcfg.max_levels = cfg.sample.max_levels;
    dcfg.inference = InferenceConfig{cfg.sample.max_dist3d, cfg.sample.prune_mode, true};
    dcfg.nms_overlap = cfg.nms_overlap;
    dcfg.pre_nms_cap = 2000;  // an untrained model scores every cell above the floor

    // neighborhood maps for per-epoch best-pose scoring of 3D variants
    std::map<const StateSpace*, std::shared_ptr<const NeighborhoodMap>> nmaps;
    if (psi_needs_depth(cfg.variant))
        for (const TrainingSample& s : samples) {
            if (s.neighborhood) {
                nmaps.emplace(s.space.get(), s.neighborhood);
            } else if (!nmaps.count(s.space.get())) {
                // intrinsics were rescaled into the state space's 3D lifts;
                // rebuild the map from the sample's own level geometry
                nmaps.emplace(s.space.get(),
                              std::make_shared<NeighborhoodMap>(build_neighborhood_map_exhaustive(
                                  *s.space, cfg.sample.max_dist3d)));
            }
        }

    std::vector<NegativeSample> pool;
    std::set<std::vector<int>> pool_keys;
    auto merge_mined = [&](std::vector<NegativeSample>&& mined) {
        for (NegativeSample& ns : mined) {
            std::vector<int> key{ns.frame, ns.level};
            for (const PlacedPart& p : ns.parts) {
                key.push_back(p.cx);
                key.push_back(p.cy);
                key.push_back(p.type);
            }
            if (pool_keys.insert(std::move(key)).second) pool.push_back(std::move(ns));
        }
    };

    Rng rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);
    double lr_mult = 1.0;
    int rounds_done = 0;
    const int interval = std::max(1, cfg.epochs / std::max(1, cfg.mining_rounds));
    double current_obj = 0.0;
    bool obj_valid = false;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (rounds_done < cfg.mining_rounds && epoch == rounds_done * interval) {
            merge_mined(
                mine_hard_negatives(m, mining_negatives, cfg.negatives_per_round, dcfg));
            ++rounds_done;
            obj_valid = false;
        }
        if (epoch == 0) {
            // no gradient can help when every example looks the same
            std::vector<double> ref =
                detail::config_fingerprint(m, *samples[0].features, samples[0].parts);
            bool all_same = true;
            for (const TrainingSample& s : samples)
                all_same =
                    all_same && detail::config_fingerprint(m, *s.features, s.parts) == ref;
            for (const NegativeSample& s : pool)
                all_same =
                    all_same && detail::config_fingerprint(m, *s.features, s.parts) == ref;
            if (all_same && !pool.empty())
                throw DegenerateData("every positive and negative feature vector is identical");
        }
        if (!obj_valid) {
            current_obj = detail::objective(m, cfg.C, samples, pool);
            obj_valid = true;
        }

        const PsModel checkpoint = m;
        const double obj_before = current_obj;
        const double eta = lr_mult * cfg.lr0 / (1.0 + cfg.lr_decay * epoch);
        const int total = int(samples.size() + pool.size());
        std::vector<int> order(std::size_t(total), 0);
        for (int i = 0; i < total; ++i) order[std::size_t(i)] = i;
        rng.shuffle(order);
        for (const int idx : order) {
            const bool positive = idx < int(samples.size());
            const FeatureMap& fmap = positive
                                         ? *samples[std::size_t(idx)].features
                                         : *pool[std::size_t(idx - samples.size())].features;
            const std::vector<PlacedPart>& parts =
                positive ? samples[std::size_t(idx)].parts
                         : pool[std::size_t(idx - samples.size())].parts;
            const double s = score_configuration(m, fmap, parts);
            detail::for_each_weight(m, [&](double& v) { v *= 1.0 - eta / double(total); });
            if (positive && s < 1.0)
                detail::add_configuration(m, fmap, parts, eta * cfg.C);
            else if (!positive && s > -1.0)
                detail::add_configuration(m, fmap, parts, -eta * cfg.C);
            detail::clamp_squared_weights(m);
        }

        double obj_after = detail::objective(m, cfg.C, samples, pool);
        if (!std::isfinite(obj_after))
            throw NonFiniteLoss("objective diverged at epoch " + std::to_string(epoch) +
                                " (step size " + std::to_string(eta) + ")");
        if (obj_after > obj_before + 1e-9) {
            m = checkpoint;  // reject the epoch, cool the schedule down
            lr_mult *= 0.5;
            obj_after = obj_before;
        }
        current_obj = obj_after;

        EpochStats st;
        st.epoch = epoch;
        st.objective = obj_after;
        st.mined_negatives = int(pool.size());
        st.learning_rate = eta;
        st.train_pck = detail::train_pck(m, samples, nmaps);
        log.epochs.push_back(st);
    }

    // keep whichever of {trained, initialization} the final working set prefers
    PsModel init = make_zero_model(cfg.tree, cfg.T, cfg.sample.template_w, cfg.sample.template_h,
                                   cfg.variant, cfg.sample.descriptors);
    init.psi4_distance = cfg.psi4_distance;
    for (int i = 1; i < m.parts(); ++i) init.edge_to_parent(i).anchor = m.edge_to_parent(i).anchor;
    detail::clamp_squared_weights(init);
    log.initial_objective = detail::objective(init, cfg.C, samples, pool);
    log.final_objective = current_obj;
    if (log.final_objective > log.initial_objective) {
        m = std::move(init);
        log.final_objective = log.initial_objective;
        log.warnings.push_back("training never improved on the zero model; kept initialization");
    }

    // threshold calibration: max F1 over held-out detections
    {
        std::vector<RgbdFrame> cal_pos(positive_frames.begin() + pos_cut, positive_frames.end());
        std::vector<RgbdFrame> cal_neg(negative_frames.begin() + neg_cut, negative_frames.end());
        if (cal_pos.empty()) {
            log.warnings.push_back("no held-out frames; calibrating the threshold on train data");
            cal_pos.assign(positive_frames.begin(), positive_frames.begin() + pos_cut);
            cal_neg.assign(negative_frames.begin(), negative_frames.begin() + neg_cut);
        }
        PsModel probe = m;
        probe.detection_threshold = -1.0;
        struct CalDet {
            double score;
            int frame;
            BoxF box;
        };
        std::vector<CalDet> dets;
        std::vector<std::vector<BoxF>> gts(cal_pos.size());
        long total_gt = 0;
        for (int fi = 0; fi < int(cal_pos.size()) + int(cal_neg.size()); ++fi) {
            const bool is_pos = fi < int(cal_pos.size());
            const RgbdFrame& frame =
                is_pos ? cal_pos[std::size_t(fi)] : cal_neg[std::size_t(fi - cal_pos.size())];
            if (is_pos) {
                for (const PersonAnnotation& a : frame.annotations)
                    gts[std::size_t(fi)].push_back(a.bbox);
                total_gt += long(frame.annotations.size());
            }
            std::vector<PoseDetection> fd;
            try {
                fd = detect_poses(probe, frame, dcfg);
            } catch (const EmptyStateSpace&) {
                continue;
            } catch (const ImageTooSmall&) {
                continue;
            }
            for (const PoseDetection& d : fd) dets.push_back(CalDet{d.score, fi, d.bbox});
        }
        std::stable_sort(dets.begin(), dets.end(), [](const CalDet& a, const CalDet& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.frame != b.frame) return a.frame < b.frame;
            return a.box.x != b.box.x ? a.box.x < b.box.x : a.box.y < b.box.y;
        });
        std::vector<std::vector<char>> claimed(gts.size());
        for (std::size_t i = 0; i < gts.size(); ++i) claimed[i].assign(gts[i].size(), 0);
        long tp = 0, fp = 0;
        double best_f1 = -1.0, best_thr = 0.0;
        for (const CalDet& d : dets) {
            bool matched = false;
            if (d.frame < int(gts.size())) {
                int gi = -1;
                double best_iou = 0.5;
                for (std::size_t g = 0; g < gts[std::size_t(d.frame)].size(); ++g) {
                    if (claimed[std::size_t(d.frame)][g]) continue;
                    const double ov = iou(d.box, gts[std::size_t(d.frame)][g]);
                    if (ov > best_iou) {
                        best_iou = ov;
                        gi = int(g);
                    }
                }
                if (gi >= 0) {
                    claimed[std::size_t(d.frame)][std::size_t(gi)] = 1;
                    matched = true;
                }
            }
            matched ? ++tp : ++fp;
            if (total_gt > 0) {
                const double f1 = 2.0 * double(tp) / double(2 * tp + fp + (total_gt - tp));
                if (f1 > best_f1 || (f1 == best_f1 && d.score < best_thr)) {
                    best_f1 = f1;
                    best_thr = d.score;
                }
            }
        }
        if (best_f1 >= 0.0) {
            m.detection_threshold = best_thr;
        } else {
            log.warnings.push_back("calibration produced no usable detections; threshold stays 0");
        }
    }
    log.calibrated_threshold = m.detection_threshold;

    if (log_out) *log_out = log;
    m.validate();
    return m;
}

/// Frames-in, model-out convenience wrapper: derives samples, then trains.
inline PsModel train_model(const std::vector<RgbdFrame>& positive_frames,
                           const std::vector<RgbdFrame>& negative_frames,
                           const TrainConfig& cfg, TrainLog* log_out = nullptr) {
    cfg.validate();
    DerivedSamples ds = derive_training_samples(positive_frames, cfg.tree, cfg.sample,
                                                psi_needs_depth(cfg.variant));
    TrainLog log;
    PsModel m = train_ssvm(ds.samples, positive_frames, negative_frames, cfg, &log);
    for (const std::string& w : ds.warnings) log.warnings.push_back(w);
    if (log_out) *log_out = log;
    return m;
}

}  // namespace ps3d
