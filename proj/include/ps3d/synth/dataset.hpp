#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ps3d/core/frame_io.hpp"
#include "ps3d/synth/scene.hpp"

namespace ps3d {

/// Renders n_frames scenes into out_dir with a manifest. The split is by
/// frame index: the first round(n * train_fraction) frames are "train", the
/// rest "test". Frame i is seeded with seed + i, so any frame can be
/// regenerated independently and rerunning the generator is byte-stable.
inline std::vector<FrameRecord> generate_dataset(const SceneConfig& cfg, int n_frames,
                                                 double train_fraction, std::uint64_t seed,
                                                 const std::string& out_dir) {
    if (n_frames < 0) throw ConfigInvalid("negative frame count");
    if (train_fraction < 0.0 || train_fraction > 1.0)
        throw ConfigInvalid("train fraction outside [0, 1]");
    cfg.validate();

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + out_dir);

    const int n_train = int(std::lround(n_frames * train_fraction));
    std::vector<FrameRecord> records;
    for (int i = 0; i < n_frames; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.json", i);
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        const RgbdFrame frame = generate_scene(cfg, seed + std::uint64_t(i));
        save_frame(frame, path);
        records.push_back(FrameRecord{path, i < n_train ? "train" : "test"});
    }
    save_dataset_manifest(out_dir, records);
    return records;
}

}  // namespace ps3d
