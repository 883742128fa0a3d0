#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "ps3d/core/errors.hpp"

namespace ps3d {

/// Generalized distance transform for concave quadratic deformation scores.
///
/// The 1D problem: value[p] = max_q f[q] + alpha*(q - u) + beta*(q - u)^2
/// with u = p + anchor and beta < 0. Each q contributes a downward parabola
/// in u with vertex v_q = q + alpha/(2*beta); the transform sweeps the upper
/// envelope. Ties resolve to the lowest q. The query loop decides when to
/// advance along the envelope by comparing the two candidate parabolas'
/// values at u directly rather than against the precomputed intersection:
/// the intersection is a rational that can round below an exact tie point,
/// while direct evaluation is exact for integer inputs, so equal scores stay
/// with the lower q just like a naive ascending scan. Advancing stays O(n):
/// envelope vertices increase along the stack, so the value difference
/// between adjacent parabolas grows monotonically in u.

struct Gdt1d {
    std::vector<double> value;
    std::vector<int> arg;
};

inline Gdt1d gdt_message_1d(const std::vector<double>& f, double alpha, double beta,
                            double anchor) {
    if (!(beta < 0.0))
        throw NonConcaveDeformation("quadratic deformation weight must be negative");
    const int n = int(f.size());
    if (n == 0) throw DimensionMismatch("empty score table");
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<int> v(n);         // parabola indices on the envelope
    std::vector<double> z(n + 1);  // segment boundaries
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int t = v[k];
            // vertices differ by exactly q - t, and the vertex heights by
            // exactly f[q] - f[t], so the intersection simplifies to
            s = 0.5 * ((f[q] - f[t]) / (beta * (q - t)) + q + t + alpha / beta);
            if (k > 0 && s <= z[k]) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }

    Gdt1d out;
    out.value.resize(n);
    out.arg.resize(n);
    const int top = k;
    const auto eval = [&](int q, double u) {
        const double d = q - u;
        return f[q] + alpha * d + beta * d * d;
    };
    k = 0;
    for (int p = 0; p < n; ++p) {
        const double u = p + anchor;
        while (k < top && eval(v[k + 1], u) > eval(v[k], u)) ++k;
        out.value[p] = eval(v[k], u);
        out.arg[p] = v[k];
    }
    return out;
}

struct GdtMessage {
    std::vector<double> value;  // row-major over the parent grid
    std::vector<int> arg;       // flattened child cell, row * width + col
};

/// Separable 2D transform over a w*h table:
///   value[p] = max_q f[q] + wc*dcb + wc2*dcb^2 + wr*drb + wr2*drb^2
/// with dcb = (qc - pc) - ac and drb = (qr - pr) - ar. The column pass picks
/// the lowest column, the row pass the lowest row, so the reported argmax is
/// the lexicographically lowest (row, col) maximizer.
inline GdtMessage gdt_message(const std::vector<double>& f, int w, int h, double wc,
                              double wc2, double wr, double wr2, double ac, double ar) {
    if (w < 1 || h < 1 || f.size() != std::size_t(w) * h)
        throw DimensionMismatch("score table does not match the stated grid");
    if (!(wc2 < 0.0) || !(wr2 < 0.0))
        throw NonConcaveDeformation("quadratic deformation weights must be negative");

    std::vector<double> mid(f.size());
    std::vector<int> mid_arg(f.size());
    std::vector<double> slice;
    for (int r = 0; r < h; ++r) {
        slice.assign(f.begin() + std::size_t(r) * w, f.begin() + std::size_t(r + 1) * w);
        const Gdt1d res = gdt_message_1d(slice, wc, wc2, ac);
        for (int pc = 0; pc < w; ++pc) {
            mid[std::size_t(r) * w + pc] = res.value[pc];
            mid_arg[std::size_t(r) * w + pc] = res.arg[pc];
        }
    }

    GdtMessage out;
    out.value.resize(f.size());
    out.arg.resize(f.size());
    slice.resize(h);
    for (int pc = 0; pc < w; ++pc) {
        for (int r = 0; r < h; ++r) slice[r] = mid[std::size_t(r) * w + pc];
        const Gdt1d res = gdt_message_1d(slice, wr, wr2, ar);
        for (int pr = 0; pr < h; ++pr) {
            const int qr = res.arg[pr];
            out.value[std::size_t(pr) * w + pc] = res.value[pr];
            out.arg[std::size_t(pr) * w + pc] = qr * w + mid_arg[std::size_t(qr) * w + pc];
        }
    }
    return out;
}

}  // namespace ps3d
