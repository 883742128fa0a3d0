#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "ps3d/cli/commands.hpp"

using namespace ps3d;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// planted-shape corpus: each joint gets a geometrically distinct marker on a
// flat background, so the appearance model alone can localize every part and
// training has a known perfect solution.

void fill_circle(ColorImage& img, int cx, int cy, int r, Rgb8 c) {
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r && x >= 0 && y >= 0 &&
                x < img.width() && y < img.height())
                img.at(x, y) = c;
}

void fill_rect(ColorImage& img, int x0, int y0, int x1, int y1, Rgb8 c) {
    for (int y = std::max(0, y0); y <= std::min(img.height() - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(img.width() - 1, x1); ++x) img.at(x, y) = c;
}

void fill_diamond(ColorImage& img, int cx, int cy, int r, Rgb8 c) {
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
            if (std::abs(x - cx) + std::abs(y - cy) <= r && x >= 0 && y >= 0 &&
                x < img.width() && y < img.height())
                img.at(x, y) = c;
}

void stroke_diag(ColorImage& img, int cx, int cy, int sx, int sy, int len, int halfw, Rgb8 c) {
    for (int t = -len; t <= len; ++t)
        fill_rect(img, cx + sx * t - halfw, cy + sy * t - halfw, cx + sx * t + halfw,
                  cy + sy * t + halfw, c);
}

void fill_triangle(ColorImage& img, int cx, int cy, int r, Rgb8 c) {
    for (int dy = -r; dy <= r; ++dy) {
        const int half = (dy + r) / 2;
        fill_rect(img, cx - half, cy + dy, cx + half, cy + dy, c);
    }
}

void draw_shape(ColorImage& img, int joint, int cx, int cy) {
    switch (joint) {
        case 0: fill_circle(img, cx, cy, 7, Rgb8{230, 60, 60}); break;
        case 1: fill_rect(img, cx - 6, cy - 6, cx + 6, cy + 6, Rgb8{60, 200, 60}); break;
        case 2:
            stroke_diag(img, cx, cy, 1, 1, 7, 1, Rgb8{80, 80, 230});
            stroke_diag(img, cx, cy, 1, -1, 7, 1, Rgb8{80, 80, 230});
            break;
        case 3: fill_rect(img, cx - 8, cy - 2, cx + 8, cy + 2, Rgb8{230, 230, 60}); break;
        case 4: fill_rect(img, cx - 2, cy - 8, cx + 2, cy + 8, Rgb8{230, 60, 230}); break;
        case 5: fill_triangle(img, cx, cy, 8, Rgb8{60, 230, 230}); break;
        case 6:
            fill_circle(img, cx, cy, 8, Rgb8{255, 150, 40});
            fill_circle(img, cx, cy, 4, Rgb8{20, 20, 20});
            break;
        case 7:
            fill_rect(img, cx - 7, cy - 2, cx + 7, cy + 2, Rgb8{150, 255, 150});
            fill_rect(img, cx - 2, cy - 7, cx + 2, cy + 7, Rgb8{150, 255, 150});
            break;
        case 8: fill_diamond(img, cx, cy, 8, Rgb8{200, 120, 255}); break;
    }
}

constexpr int kBase[9][2] = {
    {72, 24},  {48, 54},  {96, 54},  {36, 84},  {108, 84},
    {30, 114}, {114, 114}, {60, 108}, {84, 108},
};

RgbdFrame planted_frame(std::uint64_t seed, bool with_person, int n_decoys) {
    const int W = 144, H = 144;
    RgbdFrame f;
    f.color = ColorImage(W, H, Rgb8{20, 20, 20});
    f.depth = DepthImage(W, H, 2.5f);
    f.intrinsics = CameraIntrinsics::from_focal(120.0, 120.0, (W - 1) / 2.0, (H - 1) / 2.0);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> jit(-3, 3);
    if (with_person) {
        PersonAnnotation a;
        double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
        int px[9], py[9];
        for (int j = 0; j < 9; ++j) {
            px[j] = kBase[j][0] + jit(rng);
            py[j] = kBase[j][1] + jit(rng);
        }
        for (int j = 0; j < 9; ++j) {
            draw_shape(f.color, j, px[j], py[j]);
            a.joints[j] = JointAnnotation{double(px[j]), double(py[j]), true};
            x0 = std::min(x0, double(px[j]));
            y0 = std::min(y0, double(py[j]));
            x1 = std::max(x1, double(px[j]));
            y1 = std::max(y1, double(py[j]));
        }
        a.bbox = BoxF{x0 - 10, y0 - 10, x1 - x0 + 20, y1 - y0 + 20};
        f.annotations.push_back(a);
    }
    std::uniform_int_distribution<int> shape(0, 8), pos(16, 127);
    for (int d = 0; d < n_decoys; ++d) draw_shape(f.color, shape(rng), pos(rng), pos(rng));
    return f;
}

/// n_pos annotated frames, then n_neg person-free frames with decoy markers.
void write_planted_dataset(const std::string& dir, int n_pos, int n_neg, std::uint64_t seed,
                           const std::string& split, int difficult_index = -1) {
    fs::create_directories(dir);
    std::vector<FrameRecord> records;
    int idx = 0;
    auto add = [&](RgbdFrame fr, const std::string& s) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.json", idx++);
        const std::string p = (fs::path(dir) / name).string();
        save_frame(fr, p);
        records.push_back(FrameRecord{p, s});
    };
    for (int i = 0; i < n_pos; ++i) {
        RgbdFrame fr = planted_frame(seed + std::uint64_t(i), true, 0);
        if (i == difficult_index) fr.annotations[0].difficult = true;
        add(std::move(fr), split);
    }
    for (int i = 0; i < n_neg; ++i)
        add(planted_frame(seed + 1000 + std::uint64_t(i), false, 3), split);
    save_dataset_manifest(dir, records);
}

RunConfig planted_train_config(const std::string& dataset_dir, const std::string& out_dir) {
    RunConfig cfg;
    cfg.dataset_dir = dataset_dir;
    cfg.out_dir = out_dir;
    cfg.variant = PsiVariant::Psi2D;
    cfg.descriptors = descriptors_from_names({"ihog"});
    cfg.seed = 5;
    cfg.train.T = 1;
    cfg.train.C = 2.0;
    cfg.train.epochs = 8;
    cfg.train.lr0 = 5e-4;
    cfg.train.mining_rounds = 1;
    cfg.train.negatives_per_round = 40;
    cfg.train.holdout_fraction = 0.25;
    cfg.train.sample.canonical_extent_cells = 9.0;
    return cfg;
}

struct PlantedFixture {
    std::string dataset_dir = "cli_planted_ds";
    RunConfig cfg;
    TrainResult train;
};

/// Built once and shared: 12 annotated + 4 person-free planted frames and a
/// model trained on them.
const PlantedFixture& planted() {
    static const PlantedFixture fx = [] {
        PlantedFixture f;
        fs::remove_all(f.dataset_dir);
        fs::remove_all("cli_planted_out");
        write_planted_dataset(f.dataset_dir, 12, 4, 77, "train");
        f.cfg = planted_train_config(f.dataset_dir, "cli_planted_out");
        f.train = cmd_train(f.cfg);
        return f;
    }();
    return fx;
}

}  // namespace

TEST_CASE("descriptor sets resolve by name") {
    const DescriptorConfig d = descriptors_from_names({"ihog", "hdd"});
    CHECK(d.ihog);
    CHECK(d.hdd);
    CHECK_FALSE(d.dhog);
    CHECK_FALSE(d.honv);
    CHECK(descriptor_label(d) == "ihog+hdd");

    const DescriptorConfig honv_only = descriptors_from_names({"honv"});
    CHECK(descriptor_label(honv_only) == "honv");
    CHECK(honv_only.honv);
    CHECK_FALSE(honv_only.ihog);

    // label order is the stacking order, independent of the input order
    CHECK(descriptor_label(descriptors_from_names({"hdd", "ihog"})) == "ihog+hdd");

    DescriptorConfig base;
    base.cell_size = 8;
    CHECK(descriptors_from_names({"dhog"}, base).cell_size == 8);

    CHECK_THROWS_AS(descriptors_from_names({"hog"}), ConfigInvalid);
    CHECK_THROWS_AS(descriptors_from_names({}), ConfigInvalid);

    CHECK(cluster_mode_from_name("2d") == ClusterMode::Pixels2D);
    CHECK(cluster_mode_from_name("3d") == ClusterMode::Meters3D);
    CHECK(cluster_mode_name(ClusterMode::Meters3D) == std::string("3d"));
    CHECK_THROWS_AS(cluster_mode_from_name("4d"), ConfigInvalid);
}

TEST_CASE("config files load with strict keys") {
    const std::string path = "cli_config.json";
    {
        std::ofstream f(path);
        f << R"({
            "dataset": "ds", "model": "m.bin", "out": "o", "split": "test",
            "variant": "psi3d4", "features": ["ihog", "hdd"], "cell_size": 4,
            "prune": "conservative", "seed": 42, "threads": 2,
            "scene": {"width": 200, "height": 150, "n_persons": 3, "clutter_density": 0.1},
            "gen": {"frames": 25, "train_fraction": 0.6},
            "train": {"T": 4, "C": 0.5, "epochs": 3, "lr0": 0.01, "mining_rounds": 2,
                      "cluster_mode": "3d", "template_w": 7, "canonical_extent_cells": 5.5},
            "detect": {"scale_step": 1.3, "max_levels": 12, "nms_overlap": 0.4,
                       "max_dist3d": 0.7, "threshold": -0.5},
            "eval": {"alpha": 0.1, "iou": 0.6},
            "infer": {"overlays": true},
            "bench": {"frames": 9}
        })";
    }
    RunConfig cfg;
    apply_config_file(cfg, path);
    CHECK(cfg.dataset_dir == "ds");
    CHECK(cfg.model_path == "m.bin");
    CHECK(cfg.out_dir == "o");
    CHECK(cfg.split == "test");
    CHECK(cfg.variant == PsiVariant::Psi3D4);
    CHECK(cfg.descriptors.ihog);
    CHECK(cfg.descriptors.hdd);
    CHECK_FALSE(cfg.descriptors.honv);
    CHECK(cfg.descriptors.cell_size == 4);
    CHECK(cfg.prune == NeighborhoodMode::Conservative);
    CHECK(cfg.seed == 42);
    CHECK(cfg.threads == 2);
    CHECK(cfg.scene.width == 200);
    CHECK(cfg.scene.height == 150);
    CHECK(cfg.scene.n_persons == 3);
    CHECK(cfg.scene.clutter_density == 0.1);
    CHECK(cfg.scene.fov_deg == 62.0);  // untouched default
    CHECK(cfg.n_frames == 25);
    CHECK(cfg.train_fraction == 0.6);
    CHECK(cfg.train.T == 4);
    CHECK(cfg.train.C == 0.5);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.lr0 == 0.01);
    CHECK(cfg.train.mining_rounds == 2);
    CHECK(cfg.train.cluster_mode == ClusterMode::Meters3D);
    CHECK(cfg.train.sample.template_w == 7);
    CHECK(cfg.train.sample.template_h == 5);  // untouched default
    CHECK(cfg.train.sample.canonical_extent_cells == 5.5);
    CHECK(cfg.detect.scale_step == 1.3);
    CHECK(cfg.detect.max_levels == 12);
    CHECK(cfg.detect.nms_overlap == 0.4);
    CHECK(cfg.detect.inference.max_dist3d == 0.7);
    REQUIRE(cfg.detect_threshold.has_value());
    CHECK(*cfg.detect_threshold == -0.5);
    CHECK(cfg.pck_alpha == 0.1);
    CHECK(cfg.ap_iou == 0.6);
    CHECK(cfg.overlays);
    CHECK(cfg.bench_frames == 9);

    SECTION("absent keys keep their defaults") {
        std::ofstream(path) << R"({"seed": 9})";
        RunConfig c;
        apply_config_file(c, path);
        CHECK(c.seed == 9);
        CHECK(c.variant == PsiVariant::Psi2D);
        CHECK(c.descriptors.ihog);
        CHECK(c.descriptors.hdd);
        CHECK(c.train.T == 6);
        CHECK_FALSE(c.detect_threshold.has_value());
    }
    SECTION("unknown keys fail loudly") {
        std::ofstream(path) << R"({"dataset_dir": "x"})";
        RunConfig c;
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
        std::ofstream(path) << R"({"scene": {"widht": 3}})";
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
        std::ofstream(path) << R"({"train": {"epoch": 3}})";
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
    }
    SECTION("bad values fail loudly") {
        std::ofstream(path) << R"({"seed": "many"})";
        RunConfig c;
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
        std::ofstream(path) << R"({"variant": "psi5d"})";
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
        std::ofstream(path) << R"({"features": ["sift"]})";
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
        std::ofstream(path) << R"({"eval": {"alpha": 1.5}})";
        CHECK_THROWS_AS(apply_config_file(c, path), ConfigInvalid);
        std::ofstream(path) << R"({"seed": 1)";
        CHECK_THROWS_AS(apply_config_file(c, path), FormatError);
        CHECK_THROWS_AS(apply_config_file(c, "cli_config_missing.json"), IoError);
    }
    std::remove(path.c_str());
}

TEST_CASE("error families map to distinct exit codes") {
    CHECK(exit_code_for(ConfigInvalid("x")) == kExitConfig);
    CHECK(exit_code_for(IoError("x")) == kExitIo);
    CHECK(exit_code_for(FormatError("x", 0)) == kExitFormat);
    CHECK(exit_code_for(VersionMismatch("x")) == kExitFormat);
    CHECK(exit_code_for(CorruptModel("x")) == kExitFormat);
    CHECK(exit_code_for(NoValidSamples("x")) == kExitData);
    CHECK(exit_code_for(InsufficientSamples("x")) == kExitData);
    CHECK(exit_code_for(DegenerateData("x")) == kExitData);
    CHECK(exit_code_for(NoGroundTruth("x")) == kExitData);
    CHECK(exit_code_for(EmptyStateSpace("x")) == kExitData);
    CHECK(exit_code_for(DimensionMismatch("x")) == kExitInternal);
    CHECK(exit_code_for(OutOfBounds("x")) == kExitInternal);
    CHECK(exit_code_for(ImageTooSmall("x")) == kExitInternal);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitFailure);

    // every family code is nonzero and the families are mutually distinct
    const int codes[] = {kExitFailure, kExitUsage,  kExitConfig, kExitIo,
                         kExitFormat,  kExitData,   kExitInternal};
    for (std::size_t i = 0; i < std::size(codes); ++i) {
        CHECK(codes[i] != 0);
        for (std::size_t j = i + 1; j < std::size(codes); ++j) CHECK(codes[i] != codes[j]);
    }
}

TEST_CASE("dataset generation command writes deterministic splits") {
    RunConfig cfg;
    cfg.scene.width = 120;
    cfg.scene.height = 96;
    cfg.scene.n_persons = 1;
    cfg.scene.clutter_density = 0.2;
    cfg.n_frames = 6;
    cfg.train_fraction = 0.5;
    cfg.seed = 11;
    cfg.out_dir = "cli_gen_a";
    fs::remove_all("cli_gen_a");
    fs::remove_all("cli_gen_b");

    const GenDataResult a = cmd_gen_data(cfg);
    REQUIRE(a.records.size() == 6);
    CHECK(a.train_count == 3);
    CHECK(a.test_count == 3);
    CHECK(a.out_dir == "cli_gen_a");
    CHECK(load_dataset_manifest("cli_gen_a").size() == 6);

    cfg.out_dir = "cli_gen_b";
    cmd_gen_data(cfg);
    for (const char* name : {"manifest.json", "frame_00000.json", "frame_00000_color.png",
                             "frame_00000_depth.png", "frame_00005_color.png"})
        CHECK(read_bytes((fs::path("cli_gen_a") / name).string()) ==
              read_bytes((fs::path("cli_gen_b") / name).string()));

    SECTION("empty dataset") {
        RunConfig empty = cfg;
        empty.out_dir = "cli_gen_empty";
        fs::remove_all(empty.out_dir);
        empty.n_frames = 0;
        const GenDataResult r = cmd_gen_data(empty);
        CHECK(r.records.empty());
        CHECK(r.train_count == 0);
        CHECK(r.test_count == 0);
        CHECK(load_dataset_manifest(empty.out_dir).empty());
    }
    SECTION("a target directory is required") {
        RunConfig bad = cfg;
        bad.out_dir.clear();
        bad.dataset_dir.clear();
        CHECK_THROWS_AS(cmd_gen_data(bad), ConfigInvalid);
    }
}

TEST_CASE("training command reaches perfect keypoints on planted shapes") {
    const PlantedFixture& fx = planted();
    REQUIRE(fs::exists(fx.train.model_path));
    REQUIRE(fs::exists(fx.train.log_path));
    CHECK(fx.train.positive_frames == 12);
    CHECK(fx.train.negative_frames == 4);

    const PsModel m = load_model(fx.train.model_path);
    REQUIRE_NOTHROW(m.validate());
    CHECK(m.variant == PsiVariant::Psi2D);
    CHECK(m.T == 1);
    CHECK(m.descriptors.ihog);
    CHECK_FALSE(m.descriptors.hdd);

    REQUIRE(fx.train.log.epochs.size() == 8);
    CHECK(fx.train.log.epochs.back().train_pck >= 0.95);
    CHECK(fx.train.log.epochs.back().mined_negatives > 0);
    CHECK(fx.train.log.calibrated_threshold > 0.0);

    const nlohmann::json log = nlohmann::json::parse(read_bytes(fx.train.log_path));
    CHECK(log.at("version") == 1);
    CHECK(log.at("variant") == "psi2d");
    CHECK(log.at("features") == "ihog");
    CHECK(log.at("epochs").size() == 8);
    CHECK(log.at("positive_frames") == 12);

    SECTION("retraining with the same seed is byte-identical") {
        RunConfig cfg = fx.cfg;
        cfg.out_dir = "cli_planted_out2";
        fs::remove_all(cfg.out_dir);
        const TrainResult again = cmd_train(cfg);
        CHECK(read_bytes(again.model_path) == read_bytes(fx.train.model_path));
        CHECK(read_bytes(again.log_path) == read_bytes(fx.train.log_path));
    }

    SECTION("zero training epochs write the initialized model") {
        RunConfig cfg = fx.cfg;
        cfg.out_dir = "cli_planted_zero";
        fs::remove_all(cfg.out_dir);
        cfg.train.epochs = 0;
        cfg.train.holdout_fraction = 0.0;
        cfg.train.mining_rounds = 0;
        cfg.train.negatives_per_round = 0;
        const TrainResult r = cmd_train(cfg);

        // the command must hand train_model exactly the split it loaded
        std::vector<RgbdFrame> pos, neg;
        for (const FrameRecord& rec : load_dataset_manifest(fx.dataset_dir)) {
            RgbdFrame f = load_frame(rec.path);
            (f.annotations.empty() ? neg : pos).push_back(std::move(f));
        }
        TrainConfig tc = cfg.train;
        tc.variant = cfg.variant;
        tc.seed = cfg.seed;
        tc.sample.descriptors = cfg.descriptors;
        tc.sample.prune_mode = cfg.prune;
        const PsModel init = train_model(pos, neg, tc);
        const std::vector<std::uint8_t> bytes = serialize_model(init);
        CHECK(read_bytes(r.model_path) ==
              std::string(bytes.begin(), bytes.end()));
    }
}

TEST_CASE("inference command matches the library and round-trips") {
    const PlantedFixture& fx = planted();
    RunConfig cfg = fx.cfg;
    cfg.model_path = fx.train.model_path;
    cfg.out_dir = "cli_infer_out";
    fs::remove_all(cfg.out_dir);

    const InferResult r = cmd_infer(cfg);
    REQUIRE(r.frames.size() == 16);
    REQUIRE(fs::exists(r.detections_path));

    const std::vector<FrameDetections> loaded = load_detections(r.detections_path);
    REQUIRE(loaded.size() == r.frames.size());

    const PsModel m = load_model(cfg.model_path);
    DetectConfig dc = cfg.detect;
    dc.inference.mode = cfg.prune;
    const std::vector<FrameRecord> records = load_dataset_manifest(fx.dataset_dir);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].frame == r.frames[i].frame);
        // person-free tail frames must stay clean at the calibrated threshold
        if (i >= 12) CHECK(loaded[i].detections.empty());
        else CHECK_FALSE(loaded[i].detections.empty());

        // the file must reproduce direct library inference exactly
        const std::vector<PoseDetection> direct =
            detect_poses(m, load_frame(records[i].path), dc);
        REQUIRE(loaded[i].detections.size() == direct.size());
        for (std::size_t d = 0; d < direct.size(); ++d) {
            const PoseDetection& a = loaded[i].detections[d];
            const PoseDetection& b = direct[d];
            CHECK(a.score == b.score);
            CHECK(a.level == b.level);
            CHECK(a.bbox.x == b.bbox.x);
            CHECK(a.bbox.y == b.bbox.y);
            CHECK(a.bbox.w == b.bbox.w);
            CHECK(a.bbox.h == b.bbox.h);
            REQUIRE(a.parts.size() == b.parts.size());
            for (std::size_t p = 0; p < b.parts.size(); ++p) {
                CHECK(a.parts[p].cx == b.parts[p].cx);
                CHECK(a.parts[p].cy == b.parts[p].cy);
                CHECK(a.parts[p].type == b.parts[p].type);
                CHECK(a.parts[p].has3d == b.parts[p].has3d);
                if (b.parts[p].has3d) {
                    CHECK(a.parts[p].p.x == b.parts[p].p.x);
                    CHECK(a.parts[p].p.y == b.parts[p].p.y);
                    CHECK(a.parts[p].p.z == b.parts[p].p.z);
                }
            }
        }
    }

    SECTION("parallel workers do not change the output file") {
        RunConfig par = cfg;
        par.out_dir = "cli_infer_par";
        fs::remove_all(par.out_dir);
        par.threads = 3;
        const InferResult rp = cmd_infer(par);
        CHECK(read_bytes(rp.detections_path) == read_bytes(r.detections_path));
    }

    SECTION("overlays mark the arms white and magenta") {
        RunConfig ov = cfg;
        ov.out_dir = "cli_infer_overlay";
        fs::remove_all(ov.out_dir);
        ov.overlays = true;
        const InferResult ro = cmd_infer(ov);
        REQUIRE(ro.overlay_paths.size() == 16);
        const ColorImage img = read_color_png(ro.overlay_paths.front());
        CHECK(img.width() == 144);
        CHECK(img.height() == 144);
        int white = 0, magenta = 0;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const Rgb8 c = img.at(x, y);
                white += (c.r == 255 && c.g == 255 && c.b == 255) ? 1 : 0;
                magenta += (c.r == 255 && c.g == 0 && c.b == 255) ? 1 : 0;
            }
        CHECK(white > 0);
        CHECK(magenta > 0);
    }
}

TEST_CASE("evaluation command reports keypoint and detection quality") {
    const PlantedFixture& fx = planted();
    const std::string eval_ds = "cli_eval_ds";
    fs::remove_all(eval_ds);
    write_planted_dataset(eval_ds, 4, 1, 5000, "test", /*difficult_index=*/1);

    RunConfig cfg = fx.cfg;
    cfg.dataset_dir = eval_ds;
    cfg.model_path = fx.train.model_path;
    cfg.out_dir = "cli_eval_out";
    fs::remove_all(cfg.out_dir);
    cfg.split.clear();  // eval defaults to the test split

    const EvalResult r = cmd_eval(cfg);
    CHECK(r.label == "ihog,psi2d");
    CHECK(r.pck_result.average == 1.0);
    CHECK(r.pck_result.sample_count == 4);
    for (int j = 0; j < kNumJoints; ++j) CHECK(r.pck_result.per_part[std::size_t(j)] == 1.0);
    CHECK(r.ap_normal.ap == 1.0);
    CHECK(r.ap_with_difficult.ap == 1.0);
    CHECK(r.ap_normal.mode == ApMode::Normal);
    CHECK(r.ap_with_difficult.mode == ApMode::NormalPlusDifficult);

    CHECK(r.pck_table.find("right_shoulder") != std::string::npos);
    CHECK(r.pck_table.find("ihog,psi2d") != std::string::npos);
    CHECK(r.ap_table.find("AP(N+D)") != std::string::npos);
    for (const std::string& p : {r.detections_path, r.pck_path, r.ap_path, r.curve_path,
                                 r.summary_path})
        CHECK(fs::exists(p));
    CHECK(read_bytes(r.curve_path).rfind("<svg", 0) == 0);

    const nlohmann::json summary = nlohmann::json::parse(read_bytes(r.summary_path));
    CHECK(summary.at("pck").at("average") == 1.0);
    CHECK(summary.at("ap").at("N") == 1.0);
    CHECK(summary.at("frames") == 5);

    SECTION("metrics recomputed from the detections file agree exactly") {
        const std::vector<FrameDetections> loaded = load_detections(r.detections_path);
        const PsModel m = load_model(cfg.model_path);
        const std::vector<FrameRecord> records = load_dataset_manifest(eval_ds);
        std::vector<std::vector<PosePrediction>> preds(loaded.size());
        std::vector<std::vector<PersonAnnotation>> gts(loaded.size());
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            for (const PoseDetection& d : loaded[i].detections)
                preds[i].push_back(detail::to_prediction(d, m, cfg.detect.scale_step));
            gts[i] = load_frame(records[i].path).annotations;
        }
        const PckResult again = pck(preds, gts, cfg.pck_alpha);
        CHECK(again.average == r.pck_result.average);
        CHECK(again.sample_count == r.pck_result.sample_count);
        for (int j = 0; j < kNumJoints; ++j) {
            CHECK(again.per_part[std::size_t(j)] == r.pck_result.per_part[std::size_t(j)]);
            CHECK(again.counted[std::size_t(j)] == r.pck_result.counted[std::size_t(j)]);
        }
    }

    SECTION("re-running the evaluation is byte-identical") {
        RunConfig cfg2 = cfg;
        cfg2.out_dir = "cli_eval_out2";
        fs::remove_all(cfg2.out_dir);
        const EvalResult r2 = cmd_eval(cfg2);
        CHECK(read_bytes(r2.summary_path) == read_bytes(r.summary_path));
        CHECK(read_bytes(r2.pck_path) == read_bytes(r.pck_path));
        CHECK(read_bytes(r2.detections_path) == read_bytes(r.detections_path));
        CHECK(read_bytes(r2.curve_path) == read_bytes(r.curve_path));
    }
}

TEST_CASE("benchmark command times pruned against exhaustive inference") {
    RunConfig gen;
    gen.scene.width = 128;
    gen.scene.height = 96;
    gen.scene.n_persons = 1;
    gen.scene.clutter_density = 0.2;
    gen.n_frames = 2;
    gen.train_fraction = 0.0;  // everything lands in the test split
    gen.seed = 21;
    gen.out_dir = "cli_bench_ds";
    fs::remove_all(gen.out_dir);
    cmd_gen_data(gen);

    DescriptorConfig desc = descriptors_from_names({"ihog"});
    PsModel zero = make_zero_model(upper_body_tree(), 1, 3, 3, PsiVariant::Psi3D4, desc);
    zero.detection_threshold = 1.0;  // keep collection out of the timed loops
    const std::string model_path = "cli_bench_model.bin";
    save_model(zero, model_path);

    RunConfig cfg;
    cfg.dataset_dir = gen.out_dir;
    cfg.model_path = model_path;
    cfg.out_dir = "cli_bench_out";
    fs::remove_all(cfg.out_dir);

    const BenchResult r = cmd_bench(cfg);
    REQUIRE(r.frames.size() == 2);
    double pruned_sum = 0.0, unpruned_sum = 0.0;
    std::size_t pruned_edges = 0, unpruned_edges = 0;
    for (const BenchFrameStats& st : r.frames) {
        CHECK(st.pruned_edges > 0);
        CHECK(st.pruned_edges < st.unpruned_edges);
        CHECK(st.pruned_ms <= st.unpruned_ms);
        pruned_sum += st.pruned_ms;
        unpruned_sum += st.unpruned_ms;
        pruned_edges += st.pruned_edges;
        unpruned_edges += st.unpruned_edges;
    }
    // the reported ratios must be plain arithmetic over the raw numbers
    CHECK(r.pruned_ms_total == pruned_sum);
    CHECK(r.unpruned_ms_total == unpruned_sum);
    CHECK(r.speedup == unpruned_sum / pruned_sum);
    CHECK(r.edge_reduction == double(unpruned_edges) / double(pruned_edges));
    CHECK(r.edge_reduction > 1.0);
    CHECK(r.table.find("speedup") != std::string::npos);

    const nlohmann::json report = nlohmann::json::parse(read_bytes(r.report_path));
    CHECK(report.at("speedup") == r.speedup);
    CHECK(report.at("edge_reduction") == r.edge_reduction);
    CHECK(report.at("frames").size() == 2);

    SECTION("frame budget truncates the run") {
        RunConfig one = cfg;
        one.out_dir = "cli_bench_out1";
        fs::remove_all(one.out_dir);
        one.bench_frames = 1;
        CHECK(cmd_bench(one).frames.size() == 1);
    }
    SECTION("image-plane models cannot be benchmarked") {
        PsModel flat = make_zero_model(upper_body_tree(), 1, 3, 3, PsiVariant::Psi2D, desc);
        save_model(flat, "cli_bench_flat.bin");
        RunConfig bad = cfg;
        bad.model_path = "cli_bench_flat.bin";
        CHECK_THROWS_AS(cmd_bench(bad), ConfigInvalid);
    }
    SECTION("pruning off leaves nothing to compare") {
        RunConfig bad = cfg;
        bad.prune = NeighborhoodMode::Off;
        CHECK_THROWS_AS(cmd_bench(bad), ConfigInvalid);
    }
}

TEST_CASE("worker threads resolve from flag then environment") {
    unsetenv("PS3D_THREADS");
    CHECK(detail::resolve_threads(0) == 1);
    CHECK(detail::resolve_threads(4) == 4);

    setenv("PS3D_THREADS", "3", 1);
    CHECK(detail::resolve_threads(0) == 3);
    CHECK(detail::resolve_threads(2) == 2);  // the flag wins

    setenv("PS3D_THREADS", "abc", 1);
    CHECK_THROWS_AS(detail::resolve_threads(0), ConfigInvalid);
    setenv("PS3D_THREADS", "0", 1);
    CHECK_THROWS_AS(detail::resolve_threads(0), ConfigInvalid);
    setenv("PS3D_THREADS", "-2", 1);
    CHECK_THROWS_AS(detail::resolve_threads(0), ConfigInvalid);
    unsetenv("PS3D_THREADS");
}
