#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ps3d/core/errors.hpp"
#include "ps3d/model/model.hpp"

namespace ps3d {

/// Model file "PS3DMDL1", little-endian, no padding:
///   magic[8]
///   u8  variant, u8 psi4-distance mode
///   i32 parts, T, template_w, template_h
///   u8  ihog, dhog, honv, hdd; i32 cell_size
///   i32 hdd scales, hdd levels; f64 hdd clip
///   i32 honv azimuth bins, honv zenith bins
///   f64 detection threshold
///   per part: i32 parent, u32 name length, name bytes
///   per part, per type: f64 template values (row-major cells, channels fast)
///   per part, per type: f64 bias
///   per edge (child order 1..N-1), per type pair (child-type major):
///     f64 w[psi dim], f64 bias, f64 anchor (ac, ar, ax, ay, az, a3d)

namespace detail {

struct ByteWriter {
    std::vector<std::uint8_t> out;

    template <typename T>
    void raw(const T& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        out.insert(out.end(), p, p + sizeof(T));
    }
    void u8(std::uint8_t v) { raw(v); }
    void i32(std::int32_t v) { raw(v); }
    void u32(std::uint32_t v) { raw(v); }
    void f64(double v) { raw(v); }
    void str(const std::string& s) {
        u32(std::uint32_t(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
};

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    template <typename T>
    T raw() {
        if (pos + sizeof(T) > size) throw CorruptModel("model data truncated");
        T v;
        std::memcpy(&v, data + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::uint8_t u8() { return raw<std::uint8_t>(); }
    std::int32_t i32() { return raw<std::int32_t>(); }
    std::uint32_t u32() { return raw<std::uint32_t>(); }
    double f64() { return raw<double>(); }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > 4096 || pos + n > size) throw CorruptModel("model string field corrupt");
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const PsModel& m) {
    m.validate();
    detail::ByteWriter w;
    w.out.insert(w.out.end(), {'P', 'S', '3', 'D', 'M', 'D', 'L', '1'});
    w.u8(std::uint8_t(m.variant));
    w.u8(std::uint8_t(m.psi4_distance));
    w.i32(m.parts());
    w.i32(m.T);
    w.i32(m.template_w);
    w.i32(m.template_h);
    w.u8(m.descriptors.ihog);
    w.u8(m.descriptors.dhog);
    w.u8(m.descriptors.honv);
    w.u8(m.descriptors.hdd);
    w.i32(m.descriptors.cell_size);
    w.i32(m.descriptors.hdd_cfg.n_scales);
    w.i32(m.descriptors.hdd_cfg.quant_levels);
    w.f64(m.descriptors.hdd_cfg.response_clip);
    w.i32(m.descriptors.honv_cfg.azimuth_bins);
    w.i32(m.descriptors.honv_cfg.zenith_bins);
    w.f64(m.detection_threshold);
    for (const PartSpec& p : m.tree.parts()) {
        w.i32(p.parent);
        w.str(p.name);
    }
    for (int i = 0; i < m.parts(); ++i)
        for (int t = 0; t < m.T; ++t)
            for (const double v : m.templates[i][t]) w.f64(v);
    for (int i = 0; i < m.parts(); ++i)
        for (int t = 0; t < m.T; ++t) w.f64(m.bias_part[i][t]);
    for (int i = 1; i < m.parts(); ++i) {
        const EdgeParams& e = m.edge_to_parent(i);
        for (int pair = 0; pair < m.type_pairs(); ++pair) {
            for (const double v : e.w[pair]) w.f64(v);
            w.f64(e.bias[pair]);
            const Anchor& a = e.anchor[pair];
            w.f64(a.ac);
            w.f64(a.ar);
            w.f64(a.ax);
            w.f64(a.ay);
            w.f64(a.az);
            w.f64(a.a3d);
        }
    }
    return w.out;
}

inline PsModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "PS3DMDL", 7) != 0)
        throw VersionMismatch("not a model file");
    if (bytes[7] != '1')
        throw VersionMismatch("unsupported model format version");
    detail::ByteReader r{bytes.data(), bytes.size(), 8};

    PsModel m;
    const std::uint8_t variant = r.u8();
    if (variant > std::uint8_t(PsiVariant::Psi3D4))
        throw CorruptModel("invalid deformation variant tag");
    m.variant = PsiVariant(variant);
    const std::uint8_t p4 = r.u8();
    if (p4 > std::uint8_t(Psi3d4Distance::Absolute))
        throw CorruptModel("invalid distance-mode tag");
    m.psi4_distance = Psi3d4Distance(p4);

    const int parts = r.i32();
    if (parts < 1 || parts > 1024) throw CorruptModel("implausible part count");
    m.T = r.i32();
    if (m.T < 1 || m.T > 256) throw CorruptModel("implausible mixture count");
    m.template_w = r.i32();
    m.template_h = r.i32();

    m.descriptors.ihog = r.u8() != 0;
    m.descriptors.dhog = r.u8() != 0;
    m.descriptors.honv = r.u8() != 0;
    m.descriptors.hdd = r.u8() != 0;
    m.descriptors.cell_size = r.i32();
    m.descriptors.hdd_cfg.n_scales = r.i32();
    m.descriptors.hdd_cfg.quant_levels = r.i32();
    m.descriptors.hdd_cfg.response_clip = r.f64();
    m.descriptors.honv_cfg.azimuth_bins = r.i32();
    m.descriptors.honv_cfg.zenith_bins = r.i32();
    m.detection_threshold = r.f64();

    std::vector<PartSpec> specs;
    for (int i = 0; i < parts; ++i) {
        PartSpec p;
        p.id = i;
        p.parent = r.i32();
        p.name = r.str();
        specs.push_back(std::move(p));
    }
    try {
        m.tree = PartTree(std::move(specs));
        m.descriptors.validate();
    } catch (const ConfigInvalid& e) {
        throw CorruptModel(std::string("model carries invalid structure: ") + e.what());
    }

    m.templates.assign(parts, std::vector<std::vector<double>>(m.T));
    for (int i = 0; i < parts; ++i)
        for (int t = 0; t < m.T; ++t) {
            std::vector<double>& tpl = m.templates[i][t];
            tpl.resize(m.template_values());
            for (double& v : tpl) v = r.f64();
        }
    m.bias_part.assign(parts, std::vector<double>(m.T));
    for (int i = 0; i < parts; ++i)
        for (int t = 0; t < m.T; ++t) m.bias_part[i][t] = r.f64();

    for (int i = 1; i < parts; ++i) {
        EdgeParams e;
        e.child = i;
        e.parent = m.tree.parent(i);
        for (int pair = 0; pair < m.type_pairs(); ++pair) {
            std::vector<double> w(psi_dim(m.variant));
            for (double& v : w) v = r.f64();
            e.w.push_back(std::move(w));
            e.bias.push_back(r.f64());
            Anchor a;
            a.ac = r.f64();
            a.ar = r.f64();
            a.ax = r.f64();
            a.ay = r.f64();
            a.az = r.f64();
            a.a3d = r.f64();
            e.anchor.push_back(a);
        }
        m.edges.push_back(std::move(e));
    }
    if (r.pos != r.size) throw CorruptModel("trailing bytes after model payload");
    try {
        m.validate();
    } catch (const ConfigInvalid& e) {
        throw CorruptModel(std::string("deserialized model invalid: ") + e.what());
    }
    return m;
}

inline void save_model(const PsModel& m, const std::string& path) {
    const std::vector<std::uint8_t> bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("short write: " + path);
}

inline PsModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace ps3d
