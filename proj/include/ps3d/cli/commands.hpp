#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ps3d/cli/overlay.hpp"
#include "ps3d/cli/run_config.hpp"
#include "ps3d/eval/report.hpp"
#include "ps3d/inference/detections_io.hpp"
#include "ps3d/model/model_io.hpp"
#include "ps3d/synth/dataset.hpp"

namespace ps3d {

namespace detail {

/// Thread count: explicit flag, else PS3D_THREADS, else one.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PS3D_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw ConfigInvalid("PS3D_THREADS must be a positive integer");
        return int(v);
    }
    return 1;
}

/// Runs fn(0..n-1) on up to `threads` workers. Results must be written to
/// per-index slots; the caller's output order is then independent of the
/// schedule. The first exception wins and is rethrown after all workers stop.
template <typename Fn>
inline void for_each_index(int n, int threads, Fn&& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n || stop.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    stop.store(true);
                    return;
                }
            }
        });
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline std::string require_out_dir(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigInvalid("an output directory is required (--out)");
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
    return cfg.out_dir;
}

inline std::vector<FrameRecord> records_for_split(const std::string& dataset_dir,
                                                  const std::string& split) {
    if (dataset_dir.empty()) throw ConfigInvalid("a dataset directory is required (--dataset)");
    std::vector<FrameRecord> out;
    for (FrameRecord& r : load_dataset_manifest(dataset_dir))
        if (split.empty() || r.split == split) out.push_back(std::move(r));
    return out;
}

inline std::string frame_key(const std::string& frame_path, const std::string& dataset_dir) {
    std::error_code ec;
    const std::filesystem::path rel =
        std::filesystem::relative(frame_path, dataset_dir, ec);
    return ec ? frame_path : rel.generic_string();
}

/// Joint-pixel view of a detection, for the keypoint and box metrics. Parts
/// map to joints by name; the pixel arithmetic matches the state space.
inline PosePrediction to_prediction(const PoseDetection& det, const PsModel& m,
                                    double scale_step) {
    PosePrediction pred;
    pred.bbox = det.bbox;
    pred.score = det.score;
    for (JointAnnotation& j : pred.joints) j = JointAnnotation{0.0, 0.0, false};
    const double scale = std::pow(scale_step, det.level);
    const int cell = m.descriptors.cell_size;
    for (int i = 0; i < m.parts(); ++i) {
        const int j = int(joint_from_name(m.tree.part(i).name));
        pred.joints[std::size_t(j)] =
            JointAnnotation{part_pixel_x(det.parts[std::size_t(i)], cell, scale),
                            part_pixel_y(det.parts[std::size_t(i)], cell, scale), true};
    }
    return pred;
}

inline double ms_between(std::chrono::steady_clock::time_point a,
                         std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gen-data

struct GenDataResult {
    std::string out_dir;
    std::vector<FrameRecord> records;
    int train_count = 0;
    int test_count = 0;
};

/// Renders a synthetic dataset. The target directory is --out, falling back
/// to --dataset so generation and consumption can share one flag.
inline GenDataResult cmd_gen_data(const RunConfig& cfg) {
    cfg.validate();
    GenDataResult res;
    res.out_dir = cfg.out_dir.empty() ? cfg.dataset_dir : cfg.out_dir;
    if (res.out_dir.empty())
        throw ConfigInvalid("a target directory is required (--out or --dataset)");
    res.records = generate_dataset(cfg.scene, cfg.n_frames, cfg.train_fraction, cfg.seed,
                                   res.out_dir);
    for (const FrameRecord& r : res.records)
        (r.split == "train" ? res.train_count : res.test_count) += 1;
    return res;
}

// ---------------------------------------------------------------------------
// train

struct TrainResult {
    PsModel model;
    TrainLog log;
    std::string model_path;
    std::string log_path;
    int positive_frames = 0;
    int negative_frames = 0;
};

namespace detail {

inline nlohmann::json train_log_to_json(const TrainResult& res, const TrainConfig& tc) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochStats& e : res.log.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"objective", e.objective},
                          {"train_pck", e.train_pck},
                          {"mined_negatives", e.mined_negatives},
                          {"learning_rate", e.learning_rate}});
    return {{"version", 1},
            {"variant", psi_name(tc.variant)},
            {"features", descriptor_label(tc.sample.descriptors)},
            {"mixtures", tc.T},
            {"positive_frames", res.positive_frames},
            {"negative_frames", res.negative_frames},
            {"positive_count", res.log.positive_count},
            {"holdout_positive_frames", res.log.holdout_positive_frames},
            {"holdout_negative_frames", res.log.holdout_negative_frames},
            {"initial_objective", res.log.initial_objective},
            {"final_objective", res.log.final_objective},
            {"calibrated_threshold", res.log.calibrated_threshold},
            {"epochs", epochs},
            {"warnings", res.log.warnings}};
}

}  // namespace detail

/// Trains on the dataset's train split (annotated frames are positives,
/// person-free frames feed hard-negative mining) and writes the model file
/// plus a JSON training log.
inline TrainResult cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const std::vector<FrameRecord> records =
        detail::records_for_split(cfg.dataset_dir, cfg.split.empty() ? "train" : cfg.split);

    TrainResult res;
    std::vector<RgbdFrame> positives, negatives;
    for (const FrameRecord& r : records) {
        RgbdFrame f = load_frame(r.path);
        (f.annotations.empty() ? negatives : positives).push_back(std::move(f));
    }
    res.positive_frames = int(positives.size());
    res.negative_frames = int(negatives.size());

    TrainConfig tc = cfg.train;
    tc.variant = cfg.variant;
    tc.seed = cfg.seed;
    tc.sample.descriptors = cfg.descriptors;
    tc.sample.prune_mode = cfg.prune;

    res.model = train_model(positives, negatives, tc, &res.log);

    if (cfg.model_path.empty() && cfg.out_dir.empty())
        throw ConfigInvalid("a model destination is required (--model or --out)");
    std::filesystem::path model_path = cfg.model_path.empty()
                                           ? std::filesystem::path(cfg.out_dir) / "model.bin"
                                           : std::filesystem::path(cfg.model_path);
    std::error_code ec;
    if (!model_path.parent_path().empty())
        std::filesystem::create_directories(model_path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for " + model_path.string());
    save_model(res.model, model_path.string());
    res.model_path = model_path.string();

    const std::filesystem::path log_dir =
        cfg.out_dir.empty() ? model_path.parent_path() : std::filesystem::path(cfg.out_dir);
    std::filesystem::create_directories(log_dir, ec);
    res.log_path = (log_dir / "train_log.json").string();
    detail::write_json_file(res.log_path, detail::train_log_to_json(res, tc));
    return res;
}

// ---------------------------------------------------------------------------
// infer

struct InferResult {
    std::vector<FrameDetections> frames;
    std::string detections_path;
    std::vector<std::string> overlay_paths;
};

/// Detects poses on every frame of the chosen split (default: all frames)
/// and writes one detections file, plus skeleton overlay PNGs on request.
/// Frames are processed in parallel; outputs are ordered by frame index.
inline InferResult cmd_infer(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.model_path.empty()) throw ConfigInvalid("a model file is required (--model)");
    PsModel m = load_model(cfg.model_path);
    if (cfg.detect_threshold) m.detection_threshold = *cfg.detect_threshold;
    DetectConfig dc = cfg.detect;
    dc.inference.mode = cfg.prune;

    const std::string out = detail::require_out_dir(cfg);
    const std::vector<FrameRecord> records =
        detail::records_for_split(cfg.dataset_dir, cfg.split);

    std::filesystem::path overlay_dir;
    if (cfg.overlays) {
        overlay_dir = std::filesystem::path(out) / "overlays";
        std::error_code ec;
        std::filesystem::create_directories(overlay_dir, ec);
        if (ec) throw IoError("cannot create overlay directory " + overlay_dir.string());
    }

    InferResult res;
    res.frames.resize(records.size());
    std::vector<std::string> overlays(records.size());
    detail::for_each_index(int(records.size()), detail::resolve_threads(cfg.threads),
                           [&](int i) {
        const RgbdFrame frame = load_frame(records[std::size_t(i)].path);
        res.frames[std::size_t(i)].frame =
            detail::frame_key(records[std::size_t(i)].path, cfg.dataset_dir);
        res.frames[std::size_t(i)].detections = detect_poses(m, frame, dc);
        if (cfg.overlays) {
            const ColorImage img = render_overlay(
                frame, res.frames[std::size_t(i)].detections, m, dc.scale_step);
            const std::string path =
                (overlay_dir / (std::filesystem::path(records[std::size_t(i)].path)
                                    .stem().string() + "_overlay.png")).string();
            write_color_png(path, img);
            overlays[std::size_t(i)] = path;
        }
    });

    res.detections_path = (std::filesystem::path(out) / "detections.json").string();
    save_detections(res.frames, res.detections_path);
    for (std::string& p : overlays)
        if (!p.empty()) res.overlay_paths.push_back(std::move(p));
    return res;
}

// ---------------------------------------------------------------------------
// eval

struct EvalResult {
    std::string label;
    PckResult pck_result;
    ApResult ap_normal;
    ApResult ap_with_difficult;
    std::string pck_table;
    std::string ap_table;
    std::string detections_path;
    std::string pck_path;
    std::string ap_path;
    std::string curve_path;
    std::string summary_path;
};

/// Runs the model over the test split, writes the detections file, then
/// evaluates the *reloaded* file against the annotations: per-part keypoint
/// table, average precision in both difficult modes, and the PR curve SVG.
inline EvalResult cmd_eval(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.model_path.empty()) throw ConfigInvalid("a model file is required (--model)");
    PsModel m = load_model(cfg.model_path);
    if (m.parts() != kNumJoints)
        throw ConfigInvalid("keypoint evaluation needs the nine-joint tree");
    if (cfg.detect_threshold) m.detection_threshold = *cfg.detect_threshold;
    DetectConfig dc = cfg.detect;
    dc.inference.mode = cfg.prune;

    const std::string out = detail::require_out_dir(cfg);
    const std::vector<FrameRecord> records =
        detail::records_for_split(cfg.dataset_dir, cfg.split.empty() ? "test" : cfg.split);

    std::vector<FrameDetections> dets(records.size());
    std::vector<std::vector<PersonAnnotation>> gts(records.size());
    detail::for_each_index(int(records.size()), detail::resolve_threads(cfg.threads),
                           [&](int i) {
        const RgbdFrame frame = load_frame(records[std::size_t(i)].path);
        dets[std::size_t(i)].frame =
            detail::frame_key(records[std::size_t(i)].path, cfg.dataset_dir);
        dets[std::size_t(i)].detections = detect_poses(m, frame, dc);
        gts[std::size_t(i)] = frame.annotations;
    });

    EvalResult res;
    res.detections_path = (std::filesystem::path(out) / "detections.json").string();
    save_detections(dets, res.detections_path);

    // metrics run on the reloaded file so the on-disk format is part of the
    // evaluated path
    const std::vector<FrameDetections> loaded = load_detections(res.detections_path);
    std::vector<std::vector<PosePrediction>> preds(loaded.size());
    std::vector<DetectionRecord> box_dets;
    std::vector<GroundTruthBox> box_gts;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        for (const PoseDetection& d : loaded[i].detections) {
            preds[i].push_back(detail::to_prediction(d, m, dc.scale_step));
            box_dets.push_back(DetectionRecord{int(i), d.score, d.bbox});
        }
        for (const PersonAnnotation& a : gts[i])
            box_gts.push_back(GroundTruthBox{int(i), a.bbox, a.difficult});
    }

    res.label = descriptor_label(m.descriptors) + "," + psi_name(m.variant);
    res.pck_result = pck(preds, gts, cfg.pck_alpha);
    res.ap_normal = average_precision(box_dets, box_gts, cfg.ap_iou, ApMode::Normal);
    res.ap_with_difficult =
        average_precision(box_dets, box_gts, cfg.ap_iou, ApMode::NormalPlusDifficult);

    res.pck_table = format_pck_table({res.label}, {res.pck_result});
    res.ap_table = format_ap_table({res.label}, {res.ap_normal}, {res.ap_with_difficult});

    res.pck_path = (std::filesystem::path(out) / "pck.txt").string();
    res.ap_path = (std::filesystem::path(out) / "ap.txt").string();
    res.curve_path = (std::filesystem::path(out) / "pr_curve.svg").string();
    res.summary_path = (std::filesystem::path(out) / "eval.json").string();
    {
        std::ofstream f(res.pck_path, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + res.pck_path);
        f << res.pck_table;
    }
    {
        std::ofstream f(res.ap_path, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + res.ap_path);
        f << res.ap_table;
    }
    write_pr_curve_svg(res.curve_path,
                       {res.label + " (N)", res.label + " (N+D)"},
                       {res.ap_normal.curve, res.ap_with_difficult.curve});

    nlohmann::json per_part = nlohmann::json::object();
    for (int j = 0; j < kNumJoints; ++j)
        per_part[joint_name(static_cast<Joint>(j))] = res.pck_result.per_part[std::size_t(j)];
    detail::write_json_file(
        res.summary_path,
        {{"version", 1},
         {"label", res.label},
         {"alpha", cfg.pck_alpha},
         {"iou", cfg.ap_iou},
         {"frames", int(records.size())},
         {"detections", int(box_dets.size())},
         {"pck", {{"average", res.pck_result.average},
                  {"per_part", per_part},
                  {"persons", res.pck_result.sample_count}}},
         {"ap", {{"N", res.ap_normal.ap}, {"N+D", res.ap_with_difficult.ap}}}});
    return res;
}

// ---------------------------------------------------------------------------
// bench

struct BenchFrameStats {
    std::string frame;
    double pruned_ms = 0.0;
    double unpruned_ms = 0.0;
    std::size_t pruned_edges = 0;
    std::size_t unpruned_edges = 0;
    int detections = 0;
};

struct BenchResult {
    std::vector<BenchFrameStats> frames;
    double pruned_ms_total = 0.0;
    double unpruned_ms_total = 0.0;
    double speedup = 0.0;         // unpruned / pruned wall time
    double edge_reduction = 0.0;  // unpruned / pruned candidate edges
    std::string report_path;
    std::string table;
};

/// Times pruned against exhaustive inference frame by frame and counts the
/// candidate state-pair edges both ways. Runs on one thread regardless of
/// the thread flag so the wall times stay comparable. The feature pyramid is
/// shared by both runs; timings cover inference (including neighborhood-map
/// construction) only.
inline BenchResult cmd_bench(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.model_path.empty()) throw ConfigInvalid("a model file is required (--model)");
    const PsModel m = load_model(cfg.model_path);
    if (!psi_needs_depth(m.variant))
        throw ConfigInvalid(
            "the benchmark compares 3D edge pruning; the image-plane deformation has no "
            "neighborhood map");
    if (cfg.prune == NeighborhoodMode::Off)
        throw ConfigInvalid("pruned mode must be paper or conservative");
    DetectConfig dc = cfg.detect;

    const std::string out = detail::require_out_dir(cfg);
    std::vector<FrameRecord> records =
        detail::records_for_split(cfg.dataset_dir, cfg.split.empty() ? "test" : cfg.split);
    if (cfg.bench_frames > 0 && int(records.size()) > cfg.bench_frames)
        records.resize(std::size_t(cfg.bench_frames));
    if (records.empty()) throw ConfigInvalid("no frames to benchmark in this split");

    BenchResult res;
    std::size_t pruned_edges_total = 0, unpruned_edges_total = 0;
    for (const FrameRecord& r : records) {
        const RgbdFrame frame = load_frame(r.path);
        const FeaturePyramid pyr =
            build_pyramid(frame, m.descriptors, dc.scale_step, dc.effective_min_level(m),
                          dc.max_levels);

        BenchFrameStats st;
        st.frame = detail::frame_key(r.path, cfg.dataset_dir);
        for (const PyramidLevel& lev : pyr.levels) {
            if (lev.features.cells_w() < m.template_w || lev.features.cells_h() < m.template_h)
                continue;
            const StateSpace ss =
                build_state_space(lev.features.cells_w(), lev.features.cells_h(),
                                  lev.features.cell_size(), lev.depth, lev.intrinsics);
            st.pruned_edges += build_neighborhood_map(ss, lev.intrinsics,
                                                      dc.inference.max_dist3d, cfg.prune)
                                   .edge_count();
            std::size_t lifted = 0;
            for (const StateNode& n : ss.nodes) lifted += n.has3d ? 1 : 0;
            st.unpruned_edges += lifted * (lifted - 1);
        }

        InferenceConfig pruned = dc.inference;
        pruned.mode = cfg.prune;
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<PoseDetection> dets = dp_infer(m, pyr, pruned);
        const auto t1 = std::chrono::steady_clock::now();
        InferenceConfig off = dc.inference;
        off.mode = NeighborhoodMode::Off;
        dp_infer(m, pyr, off);
        const auto t2 = std::chrono::steady_clock::now();

        st.pruned_ms = detail::ms_between(t0, t1);
        st.unpruned_ms = detail::ms_between(t1, t2);
        st.detections = int(dets.size());
        pruned_edges_total += st.pruned_edges;
        unpruned_edges_total += st.unpruned_edges;
        res.pruned_ms_total += st.pruned_ms;
        res.unpruned_ms_total += st.unpruned_ms;
        res.frames.push_back(std::move(st));
    }
    res.speedup = res.pruned_ms_total > 0.0 ? res.unpruned_ms_total / res.pruned_ms_total : 0.0;
    res.edge_reduction = pruned_edges_total > 0
                             ? double(unpruned_edges_total) / double(pruned_edges_total)
                             : 0.0;

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << std::left << std::setw(28) << "frame" << std::right << std::setw(12) << "pruned ms"
       << std::setw(14) << "unpruned ms" << std::setw(15) << "pruned edges" << std::setw(16)
       << "unpruned edges" << '\n';
    for (const BenchFrameStats& st : res.frames)
        os << std::left << std::setw(28) << st.frame << std::right << std::setw(12)
           << st.pruned_ms << std::setw(14) << st.unpruned_ms << std::setw(15)
           << st.pruned_edges << std::setw(16) << st.unpruned_edges << '\n';
    os << "speedup (unpruned/pruned wall time): " << res.speedup << '\n';
    os << "edge reduction (unpruned/pruned): " << res.edge_reduction << '\n';
    res.table = os.str();

    nlohmann::json frames = nlohmann::json::array();
    for (const BenchFrameStats& st : res.frames)
        frames.push_back({{"frame", st.frame},
                          {"pruned_ms", st.pruned_ms},
                          {"unpruned_ms", st.unpruned_ms},
                          {"pruned_edges", st.pruned_edges},
                          {"unpruned_edges", st.unpruned_edges},
                          {"detections", st.detections}});
    res.report_path = (std::filesystem::path(out) / "bench.json").string();
    detail::write_json_file(res.report_path,
                            {{"version", 1},
                             {"variant", psi_name(m.variant)},
                             {"prune", neighborhood_mode_name(cfg.prune)},
                             {"frames", frames},
                             {"pruned_ms_total", res.pruned_ms_total},
                             {"unpruned_ms_total", res.unpruned_ms_total},
                             {"speedup", res.speedup},
                             {"edge_reduction", res.edge_reduction}});
    return res;
}

}  // namespace ps3d
