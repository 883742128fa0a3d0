#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "ps3d/core/errors.hpp"
#include "ps3d/core/image.hpp"

namespace ps3d {

/// PNG reader/writer for the two pixel layouts used by the dataset format:
/// 8-bit RGB (color images) and 16-bit grayscale (depth in millimeters).
/// The reader handles all five scanline filters; the writer always emits
/// filter 0 and compresses at a fixed level so output bytes are reproducible.

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open for reading: " + path);
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<std::uint8_t> bytes(size > 0 ? static_cast<std::size_t>(size) : 0);
    if (!bytes.empty() && std::fread(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
        std::fclose(f);
        throw IoError("short read: " + path);
    }
    std::fclose(f);
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    if (!bytes.empty() && std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
        std::fclose(f);
        throw IoError("short write: " + path);
    }
    std::fclose(f);
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

constexpr std::uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

/// Undoes the per-scanline filter in place; `raw` holds filter-byte-prefixed
/// scanlines, output is packed pixel bytes.
inline std::vector<std::uint8_t> defilter(const std::vector<std::uint8_t>& raw,
                                          int width, int height, int bpp) {
    const std::size_t stride = static_cast<std::size_t>(width) * bpp;
    std::vector<std::uint8_t> out(stride * height);
    std::vector<std::uint8_t> prev(stride, 0);
    std::size_t pos = 0;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[pos++];
        std::uint8_t* cur = out.data() + stride * y;
        const std::uint8_t* src = raw.data() + pos;
        switch (filter) {
            case 0:
                std::memcpy(cur, src, stride);
                break;
            case 1:
                for (std::size_t x = 0; x < stride; ++x) {
                    const int a = x >= std::size_t(bpp) ? cur[x - bpp] : 0;
                    cur[x] = std::uint8_t(src[x] + a);
                }
                break;
            case 2:
                for (std::size_t x = 0; x < stride; ++x)
                    cur[x] = std::uint8_t(src[x] + prev[x]);
                break;
            case 3:
                for (std::size_t x = 0; x < stride; ++x) {
                    const int a = x >= std::size_t(bpp) ? cur[x - bpp] : 0;
                    cur[x] = std::uint8_t(src[x] + ((a + prev[x]) >> 1));
                }
                break;
            case 4:
                for (std::size_t x = 0; x < stride; ++x) {
                    const int a = x >= std::size_t(bpp) ? cur[x - bpp] : 0;
                    const int c = x >= std::size_t(bpp) ? prev[x - bpp] : 0;
                    cur[x] = std::uint8_t(src[x] + paeth(a, prev[x], c));
                }
                break;
            default:
                throw FormatError("unknown scanline filter " + std::to_string(filter), pos - 1);
        }
        pos += stride;
        std::memcpy(prev.data(), cur, stride);
    }
    return out;
}

struct PngRaw {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<std::uint8_t> pixels;  // defiltered, packed
};

inline PngRaw decode_png(const std::string& path, int want_color_type, int want_bit_depth) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw FormatError("not a PNG file: " + path, 0);

    PngRaw png;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool saw_ihdr = false, saw_iend = false;
    while (!saw_iend) {
        if (pos + 8 > bytes.size())
            throw FormatError("truncated chunk header in " + path, pos);
        const std::uint32_t len = read_be32(&bytes[pos]);
        char type[5] = {0};
        std::memcpy(type, &bytes[pos + 4], 4);
        const std::size_t data_at = pos + 8;
        if (data_at + len + 4 > bytes.size())
            throw FormatError("truncated chunk data in " + path, pos);
        const std::uint8_t* data = &bytes[data_at];

        if (std::strcmp(type, "IHDR") == 0) {
            if (len != 13) throw FormatError("bad IHDR length", data_at);
            png.width = int(read_be32(data));
            png.height = int(read_be32(data + 4));
            png.bit_depth = data[8];
            png.color_type = data[9];
            if (data[10] != 0) throw FormatError("unsupported compression method", data_at + 10);
            if (data[11] != 0) throw FormatError("unsupported filter method", data_at + 11);
            if (data[12] != 0) throw FormatError("interlaced PNG not supported", data_at + 12);
            if (png.width <= 0 || png.height <= 0)
                throw FormatError("bad image dimensions", data_at);
            saw_ihdr = true;
        } else if (std::strcmp(type, "IDAT") == 0) {
            if (!saw_ihdr) throw FormatError("IDAT before IHDR", pos);
            idat.insert(idat.end(), data, data + len);
        } else if (std::strcmp(type, "IEND") == 0) {
            saw_iend = true;
        }
        // Ancillary chunks are skipped; CRCs are not verified.
        pos = data_at + len + 4;
    }
    if (!saw_ihdr) throw FormatError("missing IHDR in " + path, 8);

    if (png.color_type != want_color_type || png.bit_depth != want_bit_depth)
        throw FormatError("unexpected pixel format in " + path + ": color type " +
                              std::to_string(png.color_type) + ", bit depth " +
                              std::to_string(png.bit_depth),
                          8);

    const int channels = (png.color_type == 2) ? 3 : 1;
    const int bpp = channels * png.bit_depth / 8;
    const std::size_t stride = static_cast<std::size_t>(png.width) * bpp;
    const std::size_t raw_size = (stride + 1) * png.height;
    std::vector<std::uint8_t> raw(raw_size);
    uLongf out_len = raw_size;
    const int zrc = uncompress(raw.data(), &out_len, idat.data(), idat.size());
    if (zrc != Z_OK || out_len != raw_size)
        throw FormatError("corrupt IDAT stream in " + path, 8);

    png.pixels = defilter(raw, png.width, png.height, bpp);
    return png;
}

inline void encode_png(const std::string& path, int width, int height, int color_type,
                       int bit_depth, const std::vector<std::uint8_t>& pixels) {
    const int channels = (color_type == 2) ? 3 : 1;
    const std::size_t stride = static_cast<std::size_t>(width) * channels * bit_depth / 8;

    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * height);
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), pixels.begin() + stride * y, pixels.begin() + stride * (y + 1));
    }

    uLongf bound = compressBound(raw.size());
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), raw.size(), 6) != Z_OK)
        throw IoError("deflate failed for " + path);
    compressed.resize(bound);

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kPngSignature, kPngSignature + 8);

    auto chunk = [&out](const char* type, const std::vector<std::uint8_t>& data) {
        push_be32(out, std::uint32_t(data.size()));
        const std::size_t type_at = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const std::uint32_t crc = std::uint32_t(
            crc32(0, out.data() + type_at, uInt(4 + data.size())));
        push_be32(out, crc);
    };

    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, std::uint32_t(width));
    push_be32(ihdr, std::uint32_t(height));
    ihdr.push_back(std::uint8_t(bit_depth));
    ihdr.push_back(std::uint8_t(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", {});
    write_file_bytes(path, out);
}

}  // namespace detail

inline ColorImage read_color_png(const std::string& path) {
    const detail::PngRaw png = detail::decode_png(path, /*color type*/ 2, /*bit depth*/ 8);
    ColorImage img(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        const std::uint8_t* row = png.pixels.data() + std::size_t(png.width) * 3 * y;
        for (int x = 0; x < png.width; ++x)
            img.at(x, y) = Rgb8{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
    return img;
}

inline void write_color_png(const std::string& path, const ColorImage& img) {
    std::vector<std::uint8_t> pixels(std::size_t(img.width()) * img.height() * 3);
    for (int y = 0; y < img.height(); ++y) {
        std::uint8_t* row = pixels.data() + std::size_t(img.width()) * 3 * y;
        for (int x = 0; x < img.width(); ++x) {
            const Rgb8& px = img.at(x, y);
            row[3 * x] = px.r;
            row[3 * x + 1] = px.g;
            row[3 * x + 2] = px.b;
        }
    }
    detail::encode_png(path, img.width(), img.height(), 2, 8, pixels);
}

/// 16-bit grayscale, big-endian samples as mandated by the format.
inline Image<std::uint16_t> read_gray16_png(const std::string& path) {
    const detail::PngRaw png = detail::decode_png(path, /*color type*/ 0, /*bit depth*/ 16);
    Image<std::uint16_t> img(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        const std::uint8_t* row = png.pixels.data() + std::size_t(png.width) * 2 * y;
        for (int x = 0; x < png.width; ++x)
            img.at(x, y) = std::uint16_t((row[2 * x] << 8) | row[2 * x + 1]);
    }
    return img;
}

inline void write_gray16_png(const std::string& path, const Image<std::uint16_t>& img) {
    std::vector<std::uint8_t> pixels(std::size_t(img.width()) * img.height() * 2);
    for (int y = 0; y < img.height(); ++y) {
        std::uint8_t* row = pixels.data() + std::size_t(img.width()) * 2 * y;
        for (int x = 0; x < img.width(); ++x) {
            const std::uint16_t v = img.at(x, y);
            row[2 * x] = std::uint8_t(v >> 8);
            row[2 * x + 1] = std::uint8_t(v & 0xff);
        }
    }
    detail::encode_png(path, img.width(), img.height(), 0, 16, pixels);
}

}  // namespace ps3d
