#pragma once

#include <string>
#include <vector>

#include "ps3d/core/errors.hpp"
#include "ps3d/core/frame_io.hpp"
#include "ps3d/inference/inference.hpp"

namespace ps3d {

/// All detections produced on one frame, keyed by the frame's manifest path.
struct FrameDetections {
    std::string frame;
    std::vector<PoseDetection> detections;
};

namespace detail {

inline nlohmann::json detection_to_json(const PoseDetection& d) {
    nlohmann::json parts = nlohmann::json::array();
    for (const PlacedPart& p : d.parts) {
        nlohmann::json jp;
        jp["cx"] = p.cx;
        jp["cy"] = p.cy;
        jp["type"] = p.type;
        jp["has3d"] = p.has3d;
        if (p.has3d) jp["p"] = {p.p.x, p.p.y, p.p.z};
        parts.push_back(jp);
    }
    nlohmann::json j;
    j["score"] = d.score;
    j["level"] = d.level;
    j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
    j["parts"] = parts;
    return j;
}

inline PoseDetection detection_from_json(const nlohmann::json& j) {
    PoseDetection d;
    d.score = j.at("score").get<double>();
    d.level = j.at("level").get<int>();
    const auto& b = j.at("bbox");
    d.bbox = BoxF{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                  b.at(3).get<double>()};
    for (const auto& jp : j.at("parts")) {
        PlacedPart p;
        p.cx = jp.at("cx").get<int>();
        p.cy = jp.at("cy").get<int>();
        p.type = jp.at("type").get<int>();
        p.has3d = jp.at("has3d").get<bool>();
        if (p.has3d) {
            const auto& pt = jp.at("p");
            p.p = Point3D{pt.at(0).get<double>(), pt.at(1).get<double>(),
                          pt.at(2).get<double>()};
        }
        d.parts.push_back(p);
    }
    return d;
}

}  // namespace detail

inline void save_detections(const std::vector<FrameDetections>& frames,
                            const std::string& path) {
    nlohmann::json out;
    out["version"] = 1;
    out["frames"] = nlohmann::json::array();
    for (const FrameDetections& f : frames) {
        nlohmann::json jf;
        jf["frame"] = f.frame;
        jf["detections"] = nlohmann::json::array();
        for (const PoseDetection& d : f.detections)
            jf["detections"].push_back(detail::detection_to_json(d));
        out["frames"].push_back(jf);
    }
    detail::write_json_file(path, out);
}

inline std::vector<FrameDetections> load_detections(const std::string& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    try {
        if (j.at("version").get<int>() != 1)
            throw VersionMismatch("unsupported detections file version");
        std::vector<FrameDetections> frames;
        for (const auto& jf : j.at("frames")) {
            FrameDetections f;
            f.frame = jf.at("frame").get<std::string>();
            for (const auto& jd : jf.at("detections"))
                f.detections.push_back(detail::detection_from_json(jd));
            frames.push_back(std::move(f));
        }
        return frames;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed detections file: ") + e.what(), 0);
    }
}

}  // namespace ps3d
