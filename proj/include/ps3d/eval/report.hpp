#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/eval/metrics.hpp"

namespace ps3d {

/// Fixed-width text table of per-part PCK percentages, one row per labeled
/// run, with the average in the last column.
inline std::string format_pck_table(const std::vector<std::string>& labels,
                                    const std::vector<PckResult>& rows) {
    if (labels.size() != rows.size())
        throw DimensionMismatch("one label per result row required");
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << std::left << std::setw(24) << "model";
    for (int j = 0; j < kNumJoints; ++j)
        os << std::right << std::setw(15) << joint_name(static_cast<Joint>(j));
    os << std::right << std::setw(15) << "avg" << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        os << std::left << std::setw(24) << labels[r];
        for (int j = 0; j < kNumJoints; ++j)
            os << std::right << std::setw(15) << 100.0 * rows[r].per_part[j];
        os << std::right << std::setw(15) << 100.0 * rows[r].average << '\n';
    }
    return os.str();
}

/// Text table of AP values; columns are the evaluation modes.
inline std::string format_ap_table(const std::vector<std::string>& labels,
                                   const std::vector<ApResult>& normal,
                                   const std::vector<ApResult>& with_difficult) {
    if (labels.size() != normal.size() || labels.size() != with_difficult.size())
        throw DimensionMismatch("one label per result row required");
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << std::left << std::setw(24) << "model" << std::right << std::setw(10) << "AP(N)"
       << std::setw(10) << "AP(N+D)" << '\n';
    for (std::size_t r = 0; r < labels.size(); ++r)
        os << std::left << std::setw(24) << labels[r] << std::right << std::setw(10)
           << 100.0 * normal[r].ap << std::setw(10) << 100.0 * with_difficult[r].ap << '\n';
    return os.str();
}

namespace detail {

inline std::string svg_color(std::size_t i) {
    static const char* palette[] = {"#c0392b", "#2980b9", "#27ae60",
                                    "#8e44ad", "#d35400", "#16a085"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

/// Renders one or more precision-recall curves into a standalone SVG file.
inline void write_pr_curve_svg(const std::string& path,
                               const std::vector<std::string>& labels,
                               const std::vector<std::vector<PrPoint>>& curves) {
    if (labels.size() != curves.size())
        throw DimensionMismatch("one label per curve required");
    const double W = 480, H = 400, L = 56, B = 48, T = 16, R = 16;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double recall) { return L + recall * pw; };
    auto py = [&](double precision) { return T + (1.0 - precision) * ph; };

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double f = i / 5.0;
        os << "<line x1=\"" << px(f) << "\" y1=\"" << py(0) << "\" x2=\"" << px(f)
           << "\" y2=\"" << py(1) << "\" stroke=\"#ddd\"/>\n";
        os << "<line x1=\"" << px(0) << "\" y1=\"" << py(f) << "\" x2=\"" << px(1)
           << "\" y2=\"" << py(f) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << px(f) << "\" y=\"" << H - B + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << f << "</text>\n";
        os << "<text x=\"" << L - 8 << "\" y=\"" << py(f) + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << f << "</text>\n";
    }
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10
       << "\" font-size=\"12\" text-anchor=\"middle\">recall</text>\n";
    os << "<text x=\"14\" y=\"" << T + ph / 2
       << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << T + ph / 2 << ")\">precision</text>\n";

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const std::string color = detail::svg_color(c);
        if (!curves[c].empty()) {
            os << "<polyline fill=\"none\" stroke=\"" << color
               << "\" stroke-width=\"1.5\" points=\"";
            // step curve: hold precision while recall advances
            double last_p = curves[c].front().precision;
            os << px(0) << ',' << py(last_p) << ' ';
            for (const PrPoint& pt : curves[c]) {
                os << px(pt.recall) << ',' << py(last_p) << ' ';
                os << px(pt.recall) << ',' << py(pt.precision) << ' ';
                last_p = pt.precision;
            }
            os << "\"/>\n";
        }
        os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16.0 * c
           << "\" font-size=\"11\" fill=\"" << color << "\">" << labels[c] << "</text>\n";
    }
    os << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << os.str();
}

}  // namespace ps3d
