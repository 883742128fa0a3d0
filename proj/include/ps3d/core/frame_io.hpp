#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ps3d/core/errors.hpp"
#include "ps3d/core/frame.hpp"
#include "ps3d/core/png_io.hpp"

namespace ps3d {

/// Frame-on-disk layout: a per-frame JSON manifest naming an 8-bit RGB PNG
/// and a 16-bit grayscale PNG (depth in millimeters, 0 = missing), both
/// addressed relative to the manifest, plus intrinsics and annotations.

inline Image<std::uint16_t> depth_to_mm(const DepthImage& depth) {
    Image<std::uint16_t> mm(depth.width(), depth.height());
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x) {
            const long v = std::lround(double(depth.at(x, y)) * 1000.0);
            mm.at(x, y) = std::uint16_t(std::clamp(v, 0l, 65535l));
        }
    return mm;
}

inline DepthImage depth_from_mm(const Image<std::uint16_t>& mm) {
    DepthImage depth(mm.width(), mm.height());
    for (int y = 0; y < mm.height(); ++y)
        for (int x = 0; x < mm.width(); ++x)
            depth.at(x, y) = float(mm.at(x, y)) / 1000.0f;
    return depth;
}

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("malformed JSON in " + path + ": " + e.what(), e.byte);
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json annotation_to_json(const PersonAnnotation& a) {
    nlohmann::json joints = nlohmann::json::object();
    for (int j = 0; j < kNumJoints; ++j) {
        const JointAnnotation& ja = a.joints[j];
        joints[joint_name(static_cast<Joint>(j))] = {ja.u, ja.v, ja.visible};
    }
    return {{"joints", joints},
            {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
            {"difficult", a.difficult}};
}

inline PersonAnnotation annotation_from_json(const nlohmann::json& j) {
    PersonAnnotation a;
    const auto& joints = j.at("joints");
    for (int k = 0; k < kNumJoints; ++k) {
        const auto& ja = joints.at(joint_name(static_cast<Joint>(k)));
        a.joints[k] = JointAnnotation{ja.at(0).get<double>(), ja.at(1).get<double>(),
                                      ja.at(2).get<bool>()};
    }
    const auto& b = j.at("bbox");
    a.bbox = BoxF{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                  b.at(3).get<double>()};
    a.difficult = j.value("difficult", false);
    return a;
}

}  // namespace detail

inline void save_frame(const RgbdFrame& frame, const std::string& manifest_path) {
    frame.validate();
    const std::filesystem::path mp(manifest_path);
    const std::string stem = mp.stem().string();
    const std::string color_name = stem + "_color.png";
    const std::string depth_name = stem + "_depth.png";

    write_color_png((mp.parent_path() / color_name).string(), frame.color);
    write_gray16_png((mp.parent_path() / depth_name).string(), depth_to_mm(frame.depth));

    nlohmann::json j = {
        {"version", 1},
        {"color", color_name},
        {"depth", depth_name},
        {"intrinsics",
         {{"fx", frame.intrinsics.fx},
          {"fy", frame.intrinsics.fy},
          {"cx", frame.intrinsics.cx},
          {"cy", frame.intrinsics.cy}}},
        {"annotations", nlohmann::json::array()},
    };
    for (const PersonAnnotation& a : frame.annotations)
        j["annotations"].push_back(detail::annotation_to_json(a));
    detail::write_json_file(manifest_path, j);
}

inline RgbdFrame load_frame(const std::string& manifest_path) {
    const nlohmann::json j = detail::parse_json_file(manifest_path);
    try {
        if (j.at("version").get<int>() != 1)
            throw VersionMismatch("unsupported frame manifest version in " + manifest_path);
        const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();

        RgbdFrame frame;
        frame.color = read_color_png((dir / j.at("color").get<std::string>()).string());
        frame.depth =
            depth_from_mm(read_gray16_png((dir / j.at("depth").get<std::string>()).string()));

        const auto& k = j.at("intrinsics");
        frame.intrinsics =
            CameraIntrinsics::from_focal(k.at("fx").get<double>(), k.at("fy").get<double>(),
                                         k.at("cx").get<double>(), k.at("cy").get<double>());

        for (const auto& a : j.at("annotations"))
            frame.annotations.push_back(detail::annotation_from_json(a));
        frame.validate();
        return frame;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad frame manifest " + manifest_path + ": " + e.what(), 0);
    }
}

/// Dataset manifest: `manifest.json` in a directory, listing per-frame
/// manifests with their train/test split tag.
struct FrameRecord {
    std::string path;  // absolute path of the frame manifest
    std::string split;

    bool operator==(const FrameRecord&) const = default;
};

inline void save_dataset_manifest(const std::string& dir,
                                  const std::vector<FrameRecord>& records) {
    nlohmann::json j = {{"version", 1}, {"frames", nlohmann::json::array()}};
    const std::filesystem::path base(dir);
    for (const FrameRecord& r : records) {
        const std::string rel =
            std::filesystem::relative(std::filesystem::path(r.path), base).string();
        j["frames"].push_back({{"path", rel}, {"split", r.split}});
    }
    detail::write_json_file((base / "manifest.json").string(), j);
}

inline std::vector<FrameRecord> load_dataset_manifest(const std::string& dir) {
    const std::filesystem::path base(dir);
    const nlohmann::json j = detail::parse_json_file((base / "manifest.json").string());
    try {
        if (j.at("version").get<int>() != 1)
            throw VersionMismatch("unsupported dataset manifest version in " + dir);
        std::vector<FrameRecord> records;
        for (const auto& f : j.at("frames"))
            records.push_back(FrameRecord{(base / f.at("path").get<std::string>()).string(),
                                          f.at("split").get<std::string>()});
        return records;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad dataset manifest in " + dir + ": " + e.what(), 0);
    }
}

inline std::vector<RgbdFrame> load_split(const std::string& dir, const std::string& split) {
    std::vector<RgbdFrame> frames;
    for (const FrameRecord& r : load_dataset_manifest(dir))
        if (split.empty() || r.split == split) frames.push_back(load_frame(r.path));
    return frames;
}

}  // namespace ps3d
