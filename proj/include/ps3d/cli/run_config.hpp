#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ps3d/core/errors.hpp"
#include "ps3d/core/frame_io.hpp"
#include "ps3d/learning/training.hpp"
#include "ps3d/pipeline.hpp"
#include "ps3d/synth/scene.hpp"

namespace ps3d {

/// Builds a descriptor set from names in {"ihog","dhog","honv","hdd"}; every
/// other field of `base` (cell size, HDD/HONV settings) is kept.
inline DescriptorConfig descriptors_from_names(const std::vector<std::string>& names,
                                               DescriptorConfig base = {}) {
    base.ihog = base.dhog = base.honv = base.hdd = false;
    for (const std::string& n : names) {
        if (n == "ihog") base.ihog = true;
        else if (n == "dhog") base.dhog = true;
        else if (n == "honv") base.honv = true;
        else if (n == "hdd") base.hdd = true;
        else throw ConfigInvalid("unknown descriptor name: " + n);
    }
    base.validate();
    return base;
}

/// Canonical "ihog+hdd"-style label, fixed stacking order.
inline std::string descriptor_label(const DescriptorConfig& d) {
    std::string s;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!s.empty()) s += '+';
        s += name;
    };
    add(d.ihog, "ihog");
    add(d.dhog, "dhog");
    add(d.honv, "honv");
    add(d.hdd, "hdd");
    return s;
}

/// Everything a command run needs, resolvable from a JSON config file with
/// command-line flags layered on top (flags win).
struct RunConfig {
    // shared across commands
    std::string dataset_dir;
    std::string model_path;
    std::string out_dir;
    std::string split;  // empty means the command's default split
    PsiVariant variant = PsiVariant::Psi2D;
    DescriptorConfig descriptors;
    NeighborhoodMode prune = NeighborhoodMode::Paper;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: PS3D_THREADS, else 1

    // gen-data
    SceneConfig scene;
    int n_frames = 0;
    double train_fraction = 0.8;

    // train (variant, descriptors, prune, seed above are merged in at run time)
    TrainConfig train;

    // infer / eval
    DetectConfig detect;
    std::optional<double> detect_threshold;  // overrides the model's calibration
    bool overlays = false;
    double pck_alpha = 0.2;
    double ap_iou = 0.5;

    // bench
    int bench_frames = 0;  // 0 benchmarks the whole split

    void validate() const {
        descriptors.validate();
        if (threads < 0) throw ConfigInvalid("thread count must not be negative");
        if (n_frames < 0) throw ConfigInvalid("negative frame count");
        if (train_fraction < 0.0 || train_fraction > 1.0)
            throw ConfigInvalid("train fraction outside [0, 1]");
        if (!(pck_alpha > 0.0) || pck_alpha >= 1.0)
            throw ConfigInvalid("pck alpha outside (0, 1)");
        if (!(ap_iou > 0.0) || ap_iou >= 1.0) throw ConfigInvalid("ap iou outside (0, 1)");
        if (bench_frames < 0) throw ConfigInvalid("negative benchmark frame count");
    }
};

/// Exit codes, one per error family. Anything not in the library's taxonomy
/// reports as kExitFailure.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,   // unexpected error
    kExitUsage = 2,     // bad command line
    kExitConfig = 3,    // invalid configuration value or combination
    kExitIo = 4,        // missing or unwritable file
    kExitFormat = 5,    // malformed or version-mismatched input file
    kExitData = 6,      // data unusable (no samples, degenerate, empty space)
    kExitInternal = 7,  // internal consistency violation
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigInvalid*>(&e)) return kExitConfig;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const VersionMismatch*>(&e) ||
        dynamic_cast<const CorruptModel*>(&e))
        return kExitFormat;
    if (dynamic_cast<const NoValidSamples*>(&e) || dynamic_cast<const InsufficientSamples*>(&e) ||
        dynamic_cast<const DegenerateData*>(&e) || dynamic_cast<const NoGroundTruth*>(&e) ||
        dynamic_cast<const EmptyStateSpace*>(&e) || dynamic_cast<const InvalidDepth*>(&e) ||
        dynamic_cast<const NonFiniteLoss*>(&e))
        return kExitData;
    if (dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const GridMismatch*>(&e) ||
        dynamic_cast<const OutOfBounds*>(&e) || dynamic_cast<const ImageTooSmall*>(&e) ||
        dynamic_cast<const InstanceTooLarge*>(&e) ||
        dynamic_cast<const NonConcaveDeformation*>(&e))
        return kExitInternal;
    return kExitFailure;
}

namespace detail {

/// Key-checked section reader: every JSON key must be consumed by one of the
/// registered handlers, so typos fail loudly instead of being ignored.
class SectionReader {
public:
    SectionReader(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j.is_object()) throw ConfigInvalid("config section " + name_ + " must be an object");
    }

    template <typename T>
    void field(const char* key, T& out) {
        seen_.push_back(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigInvalid("config key " + name_ + "." + key + ": " + e.what());
        }
    }

    /// Field stored by name in the file, parsed with `parse`.
    template <typename T, typename Parse>
    void named(const char* key, T& out, Parse&& parse) {
        std::string s;
        bool present = false;
        seen_.push_back(key);
        const auto it = j_.find(key);
        if (it != j_.end()) {
            try {
                s = it->get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw ConfigInvalid("config key " + name_ + "." + key + ": " + e.what());
            }
            present = true;
        }
        if (present) out = parse(s);
    }

    const nlohmann::json* section(const char* key) {
        seen_.push_back(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            bool known = false;
            for (const char* k : seen_) known = known || key == k;
            if (!known) throw ConfigInvalid("unknown config key: " + name_ + "." + key);
        }
    }

private:
    const nlohmann::json& j_;
    std::string name_;
    std::vector<const char*> seen_;
};

inline void read_scene_section(const nlohmann::json& j, SceneConfig& s) {
    SectionReader r(j, "scene");
    r.field("width", s.width);
    r.field("height", s.height);
    r.field("fov_deg", s.fov_deg);
    r.field("n_persons", s.n_persons);
    r.field("min_person_depth", s.min_person_depth);
    r.field("max_person_depth", s.max_person_depth);
    r.field("min_person_separation", s.min_person_separation);
    r.field("camera_height", s.camera_height);
    r.field("camera_pitch_deg", s.camera_pitch_deg);
    r.field("room_depth", s.room_depth);
    r.field("room_half_width", s.room_half_width);
    r.field("room_height", s.room_height);
    r.field("torso_length", s.torso_length);
    r.field("neck_length", s.neck_length);
    r.field("shoulder_width", s.shoulder_width);
    r.field("hip_width", s.hip_width);
    r.field("upper_arm_length", s.upper_arm_length);
    r.field("forearm_length", s.forearm_length);
    r.field("length_jitter", s.length_jitter);
    r.field("max_arm_swing_deg", s.max_arm_swing_deg);
    r.field("max_elbow_bend_deg", s.max_elbow_bend_deg);
    r.field("max_torso_lean_deg", s.max_torso_lean_deg);
    r.field("yaw_range_deg", s.yaw_range_deg);
    r.field("clutter_density", s.clutter_density);
    r.field("color_similarity", s.color_similarity);
    r.field("depth_noise_sigma", s.depth_noise_sigma);
    r.field("depth_quantization", s.depth_quantization);
    r.finish();
}

inline void read_train_section(const nlohmann::json& j, TrainConfig& t) {
    SectionReader r(j, "train");
    r.field("T", t.T);
    r.field("C", t.C);
    r.field("epochs", t.epochs);
    r.field("lr0", t.lr0);
    r.field("lr_decay", t.lr_decay);
    r.field("mining_rounds", t.mining_rounds);
    r.field("negatives_per_round", t.negatives_per_round);
    r.field("holdout_fraction", t.holdout_fraction);
    r.field("nms_overlap", t.nms_overlap);
    r.named("cluster_mode", t.cluster_mode, cluster_mode_from_name);
    r.field("template_w", t.sample.template_w);
    r.field("template_h", t.sample.template_h);
    r.field("scale_step", t.sample.scale_step);
    r.field("max_levels", t.sample.max_levels);
    r.field("canonical_extent_cells", t.sample.canonical_extent_cells);
    r.field("max_dist3d", t.sample.max_dist3d);
    r.finish();
}

inline void read_detect_section(const nlohmann::json& j, RunConfig& cfg) {
    SectionReader r(j, "detect");
    r.field("scale_step", cfg.detect.scale_step);
    r.field("min_level_size", cfg.detect.min_level_size);
    r.field("max_levels", cfg.detect.max_levels);
    r.field("nms_overlap", cfg.detect.nms_overlap);
    r.field("max_poses", cfg.detect.max_poses);
    r.field("pre_nms_cap", cfg.detect.pre_nms_cap);
    r.field("max_dist3d", cfg.detect.inference.max_dist3d);
    r.field("use_gdt", cfg.detect.inference.use_gdt);
    double thr = 0.0;
    const auto it = j.find("threshold");
    r.section("threshold");  // mark as known
    if (it != j.end()) {
        try {
            thr = it->get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigInvalid(std::string("config key detect.threshold: ") + e.what());
        }
        cfg.detect_threshold = thr;
    }
    r.finish();
}

}  // namespace detail

/// Loads a JSON config file over cfg. Only known keys are accepted; values
/// not present keep their current (default or earlier-file) setting.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    detail::SectionReader r(j, "config");
    r.field("dataset", cfg.dataset_dir);
    r.field("model", cfg.model_path);
    r.field("out", cfg.out_dir);
    r.field("split", cfg.split);
    r.named("variant", cfg.variant, psi_from_name);
    r.named("prune", cfg.prune, neighborhood_mode_from_name);
    r.field("seed", cfg.seed);
    r.field("threads", cfg.threads);
    r.field("cell_size", cfg.descriptors.cell_size);
    {
        std::vector<std::string> names;
        bool present = false;
        const auto it = j.find("features");
        r.section("features");
        if (it != j.end()) {
            try {
                names = it->get<std::vector<std::string>>();
            } catch (const nlohmann::json::exception& e) {
                throw ConfigInvalid(std::string("config key config.features: ") + e.what());
            }
            present = true;
        }
        if (present) cfg.descriptors = descriptors_from_names(names, cfg.descriptors);
    }
    if (const nlohmann::json* s = r.section("scene")) detail::read_scene_section(*s, cfg.scene);
    if (const nlohmann::json* s = r.section("gen")) {
        detail::SectionReader g(*s, "gen");
        g.field("frames", cfg.n_frames);
        g.field("train_fraction", cfg.train_fraction);
        g.finish();
    }
    if (const nlohmann::json* s = r.section("train")) detail::read_train_section(*s, cfg.train);
    if (const nlohmann::json* s = r.section("detect")) detail::read_detect_section(*s, cfg);
    if (const nlohmann::json* s = r.section("eval")) {
        detail::SectionReader e(*s, "eval");
        e.field("alpha", cfg.pck_alpha);
        e.field("iou", cfg.ap_iou);
        e.finish();
    }
    if (const nlohmann::json* s = r.section("infer")) {
        detail::SectionReader i(*s, "infer");
        i.field("overlays", cfg.overlays);
        i.finish();
    }
    if (const nlohmann::json* s = r.section("bench")) {
        detail::SectionReader b(*s, "bench");
        b.field("frames", cfg.bench_frames);
        b.finish();
    }
    r.finish();
    cfg.validate();
}

}  // namespace ps3d
