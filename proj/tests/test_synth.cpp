#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ps3d/core/frame_io.hpp"
#include "ps3d/synth/dataset.hpp"
#include "ps3d/synth/scene.hpp"

using namespace ps3d;

namespace {

SceneConfig small_config() {
    SceneConfig cfg;
    cfg.width = 160;
    cfg.height = 120;
    return cfg;
}

bool same_depth(const DepthImage& a, const DepthImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) return false;
    return std::memcmp(a.data(), b.data(),
                       sizeof(float) * std::size_t(a.width()) * std::size_t(a.height())) == 0;
}

bool same_color(const ColorImage& a, const ColorImage& b) {
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            const Rgb8 p = a.at(x, y), q = b.at(x, y);
            if (p.r != q.r || p.g != q.g || p.b != q.b) return false;
        }
    return true;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("scene generation is deterministic in the seed") {
    const SceneConfig cfg = small_config();
    const RgbdFrame a = generate_scene(cfg, 42);
    const RgbdFrame b = generate_scene(cfg, 42);
    REQUIRE(a.annotations.size() == b.annotations.size());
    CHECK(same_color(a.color, b.color));
    CHECK(same_depth(a.depth, b.depth));
    for (std::size_t i = 0; i < a.annotations.size(); ++i) {
        CHECK(a.annotations[i].difficult == b.annotations[i].difficult);
        for (int j = 0; j < kNumJoints; ++j) {
            CHECK(a.annotations[i].joints[j].u == b.annotations[i].joints[j].u);
            CHECK(a.annotations[i].joints[j].v == b.annotations[i].joints[j].v);
            CHECK(a.annotations[i].joints[j].visible == b.annotations[i].joints[j].visible);
        }
    }
    const RgbdFrame c = generate_scene(cfg, 43);
    CHECK_FALSE(same_depth(a.depth, c.depth));
}

TEST_CASE("empty scenes still have full depth coverage") {
    SceneConfig cfg = small_config();
    cfg.n_persons = 0;
    const RgbdFrame f = generate_scene(cfg, 7);
    CHECK(f.annotations.empty());
    int invalid = 0;
    for (int y = 0; y < f.depth.height(); ++y)
        for (int x = 0; x < f.depth.width(); ++x)
            if (!depth_valid(f.depth.at(x, y))) ++invalid;
    CHECK(invalid == 0);
}

TEST_CASE("rendered frames carry consistent annotations") {
    const SceneConfig cfg = small_config();
    int persons_seen = 0, visible_joints = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const RgbdFrame f = generate_scene(cfg, seed);
        REQUIRE_NOTHROW(f.validate());
        for (const PersonAnnotation& a : f.annotations) {
            ++persons_seen;
            CHECK(a.bbox.x >= 0.0);
            CHECK(a.bbox.y >= 0.0);
            CHECK(a.bbox.right() <= double(cfg.width));
            CHECK(a.bbox.bottom() <= double(cfg.height));
            visible_joints += a.visible_count();
        }
    }
    CHECK(persons_seen >= 4);
    CHECK(visible_joints > persons_seen * 3);
}

TEST_CASE("noiseless depth agrees with the annotated joint geometry") {
    SceneConfig cfg = small_config();
    cfg.depth_noise_sigma = 0.0;
    const double step = cfg.depth_quantization;
    const CameraIntrinsics intr = cfg.intrinsics();
    int checked = 0;
    for (std::uint64_t seed = 11; seed <= 14; ++seed) {
        const SceneRender r = render_scene(cfg, seed);
        REQUIRE(r.joint_points.size() == r.frame.annotations.size());
        for (std::size_t p = 0; p < r.frame.annotations.size(); ++p) {
            const PersonAnnotation& ann = r.frame.annotations[p];
            for (int j = 0; j < kNumJoints; ++j) {
                if (!ann.joints[j].visible) continue;
                REQUIRE(r.joint_has3d[p][j]);
                const int ui = int(std::lround(ann.joints[j].u));
                const int vi = int(std::lround(ann.joints[j].v));
                const float z = r.frame.depth.at(ui, vi);
                REQUIRE(depth_valid(z));
                const Point3D expect = r.joint_points[p][j];
                // quantization is the only distortion left at sigma zero
                CHECK(std::abs(double(z) - expect.z) <= 0.51 * step);
                const Point3D got =
                    reproject(ann.joints[j].u, ann.joints[j].v, double(z), intr);
                CHECK(std::abs(got.x - expect.x) <= 1.5 * step);
                CHECK(std::abs(got.y - expect.y) <= 1.5 * step);
                CHECK(std::abs(got.z - expect.z) <= 1.5 * step);
                ++checked;
            }
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("occlusion marks heavily hidden persons as difficult") {
    SceneConfig cfg = small_config();
    cfg.n_persons = 4;
    cfg.min_person_depth = 2.0;
    cfg.max_person_depth = 3.2;
    cfg.min_person_separation = 0.55;
    cfg.clutter_density = 1.2;
    bool saw_difficult = false, saw_normal = false;
    for (std::uint64_t seed = 0; seed < 60 && !(saw_difficult && saw_normal); ++seed) {
        const RgbdFrame f = generate_scene(cfg, seed);
        for (const PersonAnnotation& a : f.annotations)
            (a.difficult ? saw_difficult : saw_normal) = true;
    }
    CHECK(saw_difficult);
    CHECK(saw_normal);
}

TEST_CASE("scene configuration validation") {
    SceneConfig cfg = small_config();
    cfg.upper_arm_length = 0.0;
    CHECK_THROWS_AS(generate_scene(cfg, 1), ConfigInvalid);
    cfg = small_config();
    cfg.forearm_length = 1.4;
    CHECK_THROWS_AS(generate_scene(cfg, 1), ConfigInvalid);
    cfg = small_config();
    cfg.n_persons = -1;
    CHECK_THROWS_AS(generate_scene(cfg, 1), ConfigInvalid);
    cfg = small_config();
    cfg.depth_quantization = 0.0;
    CHECK_THROWS_AS(generate_scene(cfg, 1), ConfigInvalid);
    cfg = small_config();
    cfg.fov_deg = 200.0;
    CHECK_THROWS_AS(generate_scene(cfg, 1), ConfigInvalid);
    cfg = small_config();
    cfg.max_person_depth = cfg.min_person_depth - 1.0;
    CHECK_THROWS_AS(generate_scene(cfg, 1), ConfigInvalid);
}

TEST_CASE("dataset generation writes a reloadable, stable corpus") {
    namespace fs = std::filesystem;
    SceneConfig cfg = small_config();
    cfg.n_persons = 1;
    cfg.clutter_density = 0.2;
    const std::string dir_a = "synth_ds_a", dir_b = "synth_ds_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    const auto records = generate_dataset(cfg, 6, 0.5, 99, dir_a);
    REQUIRE(records.size() == 6);
    int n_train = 0;
    for (const FrameRecord& r : records) n_train += r.split == "train" ? 1 : 0;
    CHECK(n_train == 3);
    CHECK(records[0].split == "train");
    CHECK(records[5].split == "test");

    SECTION("manifest round trip and split loading") {
        const auto loaded = load_dataset_manifest(dir_a);
        REQUIRE(loaded.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(fs::path(loaded[i].path).filename() == fs::path(records[i].path).filename());
            CHECK(loaded[i].split == records[i].split);
        }
        CHECK(load_split(dir_a, "train").size() == 3);
        CHECK(load_split(dir_a, "test").size() == 3);
        CHECK(load_split(dir_a, "").size() == 6);
        const RgbdFrame f = load_frame(records[2].path);
        REQUIRE_NOTHROW(f.validate());
        CHECK(f.color.width() == cfg.width);
    }

    SECTION("regeneration is byte-identical") {
        generate_dataset(cfg, 6, 0.5, 99, dir_b);
        std::vector<fs::path> names;
        for (const auto& e : fs::directory_iterator(dir_a)) names.push_back(e.path().filename());
        REQUIRE(names.size() == 6 * 3 + 1);  // manifest, depth png, color png per frame
        for (const fs::path& name : names) {
            INFO(name.string());
            CHECK(read_bytes((fs::path(dir_a) / name).string()) ==
                  read_bytes((fs::path(dir_b) / name).string()));
        }
    }

    SECTION("degenerate requests") {
        const std::string dir_c = "synth_ds_c";
        fs::remove_all(dir_c);
        CHECK(generate_dataset(cfg, 0, 0.5, 1, dir_c).empty());
        CHECK(load_dataset_manifest(dir_c).empty());
        CHECK_THROWS_AS(generate_dataset(cfg, -1, 0.5, 1, dir_c), ConfigInvalid);
        CHECK_THROWS_AS(generate_dataset(cfg, 2, 1.5, 1, dir_c), ConfigInvalid);
        fs::remove_all(dir_c);
    }

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}
