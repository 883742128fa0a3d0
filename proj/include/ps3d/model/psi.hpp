#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"

namespace ps3d {

/// Deformation feature families. Displacements are always child minus
/// parent: d = l_i - l_j for an edge (i, j) with i the child. Barred terms
/// are anchor-relative.
enum class PsiVariant : std::uint8_t {
    Psi2D = 0,  // [dc, dc^2, dr, dr^2]
    Psi3D1,     // [dx, dx^2, dy, dy^2, dz, dz^2]
    Psi3D2,     // [|dist - a|, dx, dx^2, dy, dy^2, dz, dz^2]
    Psi3D3,     // [|dist - a|, dx, dy, dz]
    Psi3D4,     // [dist term, dc, dc^2, dr, dr^2]
};

inline int psi_dim(PsiVariant v) {
    switch (v) {
        case PsiVariant::Psi2D: return 4;
        case PsiVariant::Psi3D1: return 6;
        case PsiVariant::Psi3D2: return 7;
        case PsiVariant::Psi3D3: return 4;
        case PsiVariant::Psi3D4: return 5;
    }
    throw ConfigInvalid("unknown deformation variant");
}

inline const char* psi_name(PsiVariant v) {
    switch (v) {
        case PsiVariant::Psi2D: return "psi2d";
        case PsiVariant::Psi3D1: return "psi3d1";
        case PsiVariant::Psi3D2: return "psi3d2";
        case PsiVariant::Psi3D3: return "psi3d3";
        case PsiVariant::Psi3D4: return "psi3d4";
    }
    throw ConfigInvalid("unknown deformation variant");
}

inline PsiVariant psi_from_name(const std::string& name) {
    for (const PsiVariant v : {PsiVariant::Psi2D, PsiVariant::Psi3D1, PsiVariant::Psi3D2,
                               PsiVariant::Psi3D3, PsiVariant::Psi3D4})
        if (name == psi_name(v)) return v;
    throw ConfigInvalid("unknown deformation variant name: " + name);
}

/// The leading distance term of the combined 2D/3D feature: anchor-relative
/// (| ||d|| - a_ij |, consistent with the other 3D variants) or the absolute
/// distance ||d||.
enum class Psi3d4Distance : std::uint8_t { AnchorRelative = 0, Absolute };

/// Kinematic averages learned per edge and type pair.
struct Anchor {
    double ac = 0.0, ar = 0.0;            // mean pixel-grid displacement, cells
    double ax = 0.0, ay = 0.0, az = 0.0;  // mean metric displacement, meters
    double a3d = 0.0;                     // mean 3D distance, meters

    bool operator==(const Anchor&) const = default;
};

inline std::array<double, 4> psi_2d(double ci, double ri, double cj, double rj,
                                    const Anchor& a) {
    const double dc = (ci - cj) - a.ac;
    const double dr = (ri - rj) - a.ar;
    return {dc, dc * dc, dr, dr * dr};
}

inline std::array<double, 6> psi_3d_1(const Point3D& pi, const Point3D& pj, const Anchor& a) {
    const double dx = (pi.x - pj.x) - a.ax;
    const double dy = (pi.y - pj.y) - a.ay;
    const double dz = (pi.z - pj.z) - a.az;
    return {dx, dx * dx, dy, dy * dy, dz, dz * dz};
}

namespace detail {
inline double anchor_relative_distance(const Point3D& pi, const Point3D& pj,
                                       const Anchor& a) {
    return std::abs(distance3d(pi, pj) - a.a3d);
}
}  // namespace detail

inline std::array<double, 7> psi_3d_2(const Point3D& pi, const Point3D& pj, const Anchor& a) {
    const auto base = psi_3d_1(pi, pj, a);
    return {detail::anchor_relative_distance(pi, pj, a), base[0], base[1], base[2],
            base[3],  base[4], base[5]};
}

inline std::array<double, 4> psi_3d_3(const Point3D& pi, const Point3D& pj, const Anchor& a) {
    const double dx = (pi.x - pj.x) - a.ax;
    const double dy = (pi.y - pj.y) - a.ay;
    const double dz = (pi.z - pj.z) - a.az;
    return {detail::anchor_relative_distance(pi, pj, a), dx, dy, dz};
}

inline std::array<double, 5> psi_3d_4(const Point3D& pi, const Point3D& pj, double ci,
                                      double ri, double cj, double rj, const Anchor& a,
                                      Psi3d4Distance mode = Psi3d4Distance::AnchorRelative) {
    const double lead = mode == Psi3d4Distance::AnchorRelative
                            ? detail::anchor_relative_distance(pi, pj, a)
                            : distance3d(pi, pj);
    const auto plane = psi_2d(ci, ri, cj, rj, a);
    return {lead, plane[0], plane[1], plane[2], plane[3]};
}

/// Indices of the squared-displacement components of each variant; their
/// learned weights must stay negative so penalties are concave.
inline std::vector<int> psi_squared_indices(PsiVariant v) {
    switch (v) {
        case PsiVariant::Psi2D: return {1, 3};
        case PsiVariant::Psi3D1: return {1, 3, 5};
        case PsiVariant::Psi3D2: return {2, 4, 6};
        case PsiVariant::Psi3D3: return {};
        case PsiVariant::Psi3D4: return {2, 4};
    }
    throw ConfigInvalid("unknown deformation variant");
}

/// Whether the variant reads the depth map (all but the image-plane one).
inline bool psi_needs_depth(PsiVariant v) { return v != PsiVariant::Psi2D; }

}  // namespace ps3d
