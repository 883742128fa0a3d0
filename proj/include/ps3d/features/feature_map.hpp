#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ps3d/core/errors.hpp"

namespace ps3d {

/// Dense grid of per-cell descriptor vectors. Cells are row-major, channels
/// contiguous within a cell. `scale` records the image-pyramid factor the
/// source image was shrunk by before cell extraction.
class FeatureMap {
public:
    FeatureMap() = default;

    FeatureMap(int cells_w, int cells_h, int channels, int cell_size, double scale = 1.0)
        : cells_w_(cells_w),
          cells_h_(cells_h),
          channels_(channels),
          cell_size_(cell_size),
          scale_(scale),
          values_(static_cast<std::size_t>(cells_w) * cells_h * channels, 0.0f) {
        if (cells_w <= 0 || cells_h <= 0 || channels <= 0)
            throw DimensionMismatch("feature grid dimensions must be positive");
        if (cell_size < 2) throw ConfigInvalid("cell_size must be at least 2");
    }

    int cells_w() const { return cells_w_; }
    int cells_h() const { return cells_h_; }
    int channels() const { return channels_; }
    int cell_size() const { return cell_size_; }
    double scale() const { return scale_; }
    void set_scale(double scale) { scale_ = scale; }

    float* cell(int cx, int cy) {
        return values_.data() + (static_cast<std::size_t>(cy) * cells_w_ + cx) * channels_;
    }
    const float* cell(int cx, int cy) const {
        return values_.data() + (static_cast<std::size_t>(cy) * cells_w_ + cx) * channels_;
    }

    const std::vector<float>& values() const { return values_; }
    std::vector<float>& values() { return values_; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(),
                           [](float v) { return std::isfinite(v); });
    }

    bool operator==(const FeatureMap&) const = default;

private:
    int cells_w_ = 0;
    int cells_h_ = 0;
    int channels_ = 0;
    int cell_size_ = 0;
    double scale_ = 1.0;
    std::vector<float> values_;
};

/// L2 normalization with hysteresis: normalize, clip components at 0.2,
/// normalize again. The zero vector stays zero.
inline void l2hys_normalize(float* v, int n, float clip = 0.2f) {
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += double(v[i]) * v[i];
    if (sq <= 0.0) return;
    const float inv = float(1.0 / std::sqrt(sq));
    sq = 0.0;
    for (int i = 0; i < n; ++i) {
        v[i] = std::min(v[i] * inv, clip);
        sq += double(v[i]) * v[i];
    }
    if (sq <= 0.0) return;
    const float inv2 = float(1.0 / std::sqrt(sq));
    for (int i = 0; i < n; ++i) v[i] *= inv2;
}

inline std::vector<float> l2hys_normalize(std::vector<float> v, float clip = 0.2f) {
    l2hys_normalize(v.data(), int(v.size()), clip);
    return v;
}

/// Stacks the channel vectors of several maps over one shared grid.
inline FeatureMap concat_features(const std::vector<const FeatureMap*>& maps) {
    if (maps.empty()) throw GridMismatch("nothing to concatenate");
    const FeatureMap& first = *maps.front();
    int channels = 0;
    for (const FeatureMap* m : maps) {
        if (m->cells_w() != first.cells_w() || m->cells_h() != first.cells_h() ||
            m->cell_size() != first.cell_size())
            throw GridMismatch("feature maps disagree on grid geometry");
        channels += m->channels();
    }
    FeatureMap out(first.cells_w(), first.cells_h(), channels, first.cell_size(),
                   first.scale());
    for (int cy = 0; cy < out.cells_h(); ++cy)
        for (int cx = 0; cx < out.cells_w(); ++cx) {
            float* dst = out.cell(cx, cy);
            for (const FeatureMap* m : maps) {
                std::memcpy(dst, m->cell(cx, cy), sizeof(float) * m->channels());
                dst += m->channels();
            }
        }
    return out;
}

/// Debug dump format "PS3DFMP1": magic, four int32 header fields
/// (cells_w, cells_h, channels, cell_size), one float64 scale, then
/// row-major float32 cell vectors. Little-endian throughout.
inline void save_feature_map(const FeatureMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("PS3DFMP1", 8);
    const std::int32_t header[4] = {map.cells_w(), map.cells_h(), map.channels(),
                                    map.cell_size()};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    const double scale = map.scale();
    out.write(reinterpret_cast<const char*>(&scale), sizeof scale);
    out.write(reinterpret_cast<const char*>(map.values().data()),
              std::streamsize(map.values().size() * sizeof(float)));
    if (!out) throw IoError("short write: " + path);
}

inline FeatureMap load_feature_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[8];
    if (!in.read(magic, 8)) throw FormatError("truncated feature dump " + path, 0);
    if (std::memcmp(magic, "PS3DFMP1", 8) != 0)
        throw VersionMismatch("not a feature dump or unsupported version: " + path);
    std::int32_t header[4];
    double scale = 1.0;
    if (!in.read(reinterpret_cast<char*>(header), sizeof header) ||
        !in.read(reinterpret_cast<char*>(&scale), sizeof scale))
        throw FormatError("truncated feature dump header " + path, 8);
    FeatureMap map(header[0], header[1], header[2], header[3], scale);
    if (!in.read(reinterpret_cast<char*>(map.values().data()),
                 std::streamsize(map.values().size() * sizeof(float))))
        throw FormatError("truncated feature dump payload " + path, 32);
    return map;
}

}  // namespace ps3d
