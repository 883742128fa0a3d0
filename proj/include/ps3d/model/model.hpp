#pragma once

#include <cmath>
#include <vector>

#include "ps3d/core/errors.hpp"
#include "ps3d/features/pyramid.hpp"
#include "ps3d/model/part_tree.hpp"
#include "ps3d/model/psi.hpp"

namespace ps3d {

/// Deformation parameters of one edge for every (child type, parent type)
/// pair, flattened as t_child * T + t_parent.
struct EdgeParams {
    int child = 0;
    int parent = 0;
    std::vector<std::vector<double>> w;  // [type pair][psi_dim]
    std::vector<double> bias;            // [type pair]
    std::vector<Anchor> anchor;          // [type pair]

    bool operator==(const EdgeParams&) const = default;
};

/// Mixtures-of-parts model: per part, T typed templates and biases; per
/// tree edge, typed deformation weights, biases and anchors.
struct PsModel {
    PartTree tree;
    int T = 6;
    int template_w = 5;  // cells, odd: templates are centered on the state
    int template_h = 5;
    PsiVariant variant = PsiVariant::Psi2D;
    Psi3d4Distance psi4_distance = Psi3d4Distance::AnchorRelative;
    DescriptorConfig descriptors;
    double detection_threshold = 0.0;

    std::vector<std::vector<std::vector<double>>> templates;  // [part][type][tpl values]
    std::vector<std::vector<double>> bias_part;               // [part][type]
    std::vector<EdgeParams> edges;                            // [child id 1..N-1]

    int parts() const { return tree.size(); }
    int channels() const { return descriptors.channels(); }
    std::size_t template_values() const {
        return std::size_t(template_w) * template_h * channels();
    }
    int type_pairs() const { return T * T; }
    const EdgeParams& edge_to_parent(int child) const { return edges[child - 1]; }
    EdgeParams& edge_to_parent(int child) { return edges[child - 1]; }

    void validate() const {
        tree.validate();
        descriptors.validate();
        if (T < 1) throw ConfigInvalid("mixture count must be positive");
        if (template_w < 1 || template_h < 1 || template_w % 2 == 0 || template_h % 2 == 0)
            throw ConfigInvalid("template dims must be positive and odd");
        if (int(templates.size()) != parts() || int(bias_part.size()) != parts())
            throw CorruptModel("per-part tables sized inconsistently with the tree");
        for (int i = 0; i < parts(); ++i) {
            if (int(templates[i].size()) != T || int(bias_part[i].size()) != T)
                throw CorruptModel("part " + std::to_string(i) + " is missing typed entries");
            for (const auto& tpl : templates[i]) {
                if (tpl.size() != template_values())
                    throw CorruptModel("template size mismatch on part " + std::to_string(i));
                for (const double v : tpl)
                    if (!std::isfinite(v)) throw CorruptModel("non-finite template weight");
            }
            for (const double b : bias_part[i])
                if (!std::isfinite(b)) throw CorruptModel("non-finite part bias");
        }
        if (int(edges.size()) != parts() - 1)
            throw CorruptModel("expected one edge per non-root part");
        for (int i = 1; i < parts(); ++i) {
            const EdgeParams& e = edge_to_parent(i);
            if (e.child != i || e.parent != tree.parent(i))
                throw CorruptModel("edge endpoints disagree with the tree");
            if (int(e.w.size()) != type_pairs() || int(e.bias.size()) != type_pairs() ||
                int(e.anchor.size()) != type_pairs())
                throw CorruptModel("edge tables sized inconsistently with T");
            for (const auto& w : e.w) {
                if (int(w.size()) != psi_dim(variant))
                    throw CorruptModel("deformation weight length mismatch");
                for (const double v : w)
                    if (!std::isfinite(v)) throw CorruptModel("non-finite deformation weight");
            }
        }
        if (!std::isfinite(detection_threshold))
            throw CorruptModel("non-finite detection threshold");
    }
};

/// Allocates a zeroed model over the given tree and descriptor set.
inline PsModel make_zero_model(PartTree tree, int T, int template_w, int template_h,
                               PsiVariant variant, const DescriptorConfig& descriptors) {
    PsModel m;
    m.tree = std::move(tree);
    m.T = T;
    m.template_w = template_w;
    m.template_h = template_h;
    m.variant = variant;
    m.descriptors = descriptors;
    m.templates.assign(m.parts(), std::vector<std::vector<double>>(
                                      T, std::vector<double>(m.template_values(), 0.0)));
    m.bias_part.assign(m.parts(), std::vector<double>(T, 0.0));
    for (int i = 1; i < m.parts(); ++i) {
        EdgeParams e;
        e.child = i;
        e.parent = m.tree.parent(i);
        e.w.assign(m.type_pairs(), std::vector<double>(psi_dim(variant), 0.0));
        e.bias.assign(m.type_pairs(), 0.0);
        e.anchor.assign(m.type_pairs(), Anchor{});
        m.edges.push_back(std::move(e));
    }
    return m;
}

/// One part's placement: cell-grid location, mixture type, and the state's
/// 3D lift when its depth is valid.
struct PlacedPart {
    int cx = 0;
    int cy = 0;
    int type = 0;
    bool has3d = false;
    Point3D p;

    bool operator==(const PlacedPart&) const = default;
};

/// Template response plus type bias at a cell-grid location. The template
/// is centered; it must fit inside the grid.
inline double appearance_score(const PsModel& m, const FeatureMap& fmap, int part, int type,
                               int cx, int cy) {
    const int hw = m.template_w / 2, hh = m.template_h / 2;
    if (cx - hw < 0 || cx + hw >= fmap.cells_w() || cy - hh < 0 || cy + hh >= fmap.cells_h())
        throw OutOfBounds("template does not fit at this location");
    if (fmap.channels() != m.channels())
        throw DimensionMismatch("feature map channels do not match the model");
    const std::vector<double>& w = m.templates[part][type];
    const int ch = m.channels();
    double score = 0.0;
    std::size_t wi = 0;
    for (int ty = 0; ty < m.template_h; ++ty)
        for (int tx = 0; tx < m.template_w; ++tx) {
            const float* f = fmap.cell(cx + tx - hw, cy + ty - hh);
            for (int c = 0; c < ch; ++c) score += w[wi++] * f[c];
        }
    return score + m.bias_part[part][type];
}

/// Evaluates the variant's deformation feature for an edge placement.
/// 3D variants require both endpoints to carry valid 3D lifts.
inline std::vector<double> psi_features(const PsModel& m, const Anchor& a,
                                        const PlacedPart& child, const PlacedPart& parent) {
    if (psi_needs_depth(m.variant) && (!child.has3d || !parent.has3d))
        throw InvalidDepth("3D deformation feature over a depth-invalid state");
    switch (m.variant) {
        case PsiVariant::Psi2D: {
            const auto v = psi_2d(child.cx, child.cy, parent.cx, parent.cy, a);
            return {v.begin(), v.end()};
        }
        case PsiVariant::Psi3D1: {
            const auto v = psi_3d_1(child.p, parent.p, a);
            return {v.begin(), v.end()};
        }
        case PsiVariant::Psi3D2: {
            const auto v = psi_3d_2(child.p, parent.p, a);
            return {v.begin(), v.end()};
        }
        case PsiVariant::Psi3D3: {
            const auto v = psi_3d_3(child.p, parent.p, a);
            return {v.begin(), v.end()};
        }
        case PsiVariant::Psi3D4: {
            const auto v = psi_3d_4(child.p, parent.p, child.cx, child.cy, parent.cx,
                                    parent.cy, a, m.psi4_distance);
            return {v.begin(), v.end()};
        }
    }
    throw ConfigInvalid("unknown deformation variant");
}

inline double pairwise_score(const PsModel& m, int child_part, int t_child, int t_parent,
                             const PlacedPart& child, const PlacedPart& parent) {
    const EdgeParams& e = m.edge_to_parent(child_part);
    const int pair = t_child * m.T + t_parent;
    const std::vector<double> psi = psi_features(m, e.anchor[pair], child, parent);
    const std::vector<double>& w = e.w[pair];
    double score = e.bias[pair];
    for (std::size_t k = 0; k < psi.size(); ++k) score += w[k] * psi[k];
    return score;
}

/// Full configuration score: the sum of every part's appearance term and
/// every edge's deformation term.
inline double score_configuration(const PsModel& m, const FeatureMap& fmap,
                                  const std::vector<PlacedPart>& states) {
    if (int(states.size()) != m.parts())
        throw DimensionMismatch("configuration must place every part");
    double total = 0.0;
    for (int i = 0; i < m.parts(); ++i)
        total += appearance_score(m, fmap, i, states[i].type, states[i].cx, states[i].cy);
    for (int i = 1; i < m.parts(); ++i)
        total += pairwise_score(m, i, states[i].type, states[m.tree.parent(i)].type,
                                states[i], states[m.tree.parent(i)]);
    return total;
}

}  // namespace ps3d
