#pragma once

#include <cstdint>
#include <vector>

#include "ps3d/core/errors.hpp"

namespace ps3d {

/// Row-major 2D image. Pixel (x, y) with x along columns, y along rows.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : w_(width), h_(height), data_(static_cast<std::size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw DimensionMismatch("image dimensions must be positive");
    }

    int width() const { return w_; }
    int height() const { return h_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    bool in_bounds(int x, int y) const { return x >= 0 && x < w_ && y >= 0 && y < h_; }

    T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * w_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * w_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Image&) const = default;

private:
    int w_ = 0;
    int h_ = 0;
    std::vector<T> data_;
};

struct Rgb8 {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb8&) const = default;
};

using ColorImage = Image<Rgb8>;
using GrayImage = Image<float>;

/// Depth in meters per pixel; 0 marks a missing/invalid measurement.
using DepthImage = Image<float>;

constexpr float kInvalidDepth = 0.0f;

inline bool depth_valid(float z) { return z > 0.0f; }

}  // namespace ps3d
