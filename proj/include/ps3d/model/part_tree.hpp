#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/core/errors.hpp"

namespace ps3d {

struct PartSpec {
    int id = 0;
    int parent = -1;  // -1 marks the root
    std::string name;

    bool operator==(const PartSpec&) const = default;
};

/// Kinematic tree over the model's parts. Part ids are dense 0..N-1 and the
/// root is part 0.
class PartTree {
public:
    PartTree() = default;

    explicit PartTree(std::vector<PartSpec> parts) : parts_(std::move(parts)) {
        validate();
        children_.resize(parts_.size());
        for (const PartSpec& p : parts_)
            if (p.parent >= 0) children_[p.parent].push_back(p.id);
        // children before parents, so messages can be consumed in one sweep
        order_.reserve(parts_.size());
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            order_.push_back(id);
            for (const int c : children_[id]) stack.push_back(c);
        }
        std::reverse(order_.begin(), order_.end());
    }

    int size() const { return int(parts_.size()); }
    const std::vector<PartSpec>& parts() const { return parts_; }
    const PartSpec& part(int id) const { return parts_[id]; }
    int parent(int id) const { return parts_[id].parent; }
    const std::vector<int>& children(int id) const { return children_[id]; }

    /// Every part appears after all of its children (root last).
    const std::vector<int>& leaf_to_root_order() const { return order_; }

    void validate() const {
        if (parts_.empty()) throw ConfigInvalid("part tree is empty");
        if (parts_[0].parent != -1) throw ConfigInvalid("part 0 must be the root");
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            const PartSpec& p = parts_[i];
            if (p.id != int(i)) throw ConfigInvalid("part ids must be dense and ordered");
            if (int(i) > 0 && (p.parent < 0 || p.parent >= int(parts_.size()) ||
                               p.parent == p.id))
                throw ConfigInvalid("part " + std::to_string(i) + " has an invalid parent");
        }
        // walking parent links from any part must reach the root acyclically
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            int cur = int(i), hops = 0;
            while (cur != 0) {
                cur = parts_[cur].parent;
                if (++hops > int(parts_.size()))
                    throw ConfigInvalid("parent links contain a cycle");
            }
        }
    }

    bool operator==(const PartTree& o) const { return parts_ == o.parts_; }

private:
    std::vector<PartSpec> parts_;
    std::vector<std::vector<int>> children_;
    std::vector<int> order_;
};

/// The nine-joint upper-body tree: head at the root, shoulders under the
/// head, elbows under shoulders, wrists under elbows, hips under the
/// same-side shoulders. Part ids coincide with the Joint enum.
inline PartTree upper_body_tree() {
    auto parent_of = [](Joint j) {
        switch (j) {
            case Joint::Head: return -1;
            case Joint::LeftShoulder:
            case Joint::RightShoulder: return int(Joint::Head);
            case Joint::LeftElbow: return int(Joint::LeftShoulder);
            case Joint::RightElbow: return int(Joint::RightShoulder);
            case Joint::LeftWrist: return int(Joint::LeftElbow);
            case Joint::RightWrist: return int(Joint::RightElbow);
            case Joint::LeftHip: return int(Joint::LeftShoulder);
            case Joint::RightHip: return int(Joint::RightShoulder);
        }
        return -1;
    };
    std::vector<PartSpec> parts;
    for (int i = 0; i < kNumJoints; ++i) {
        const Joint j = static_cast<Joint>(i);
        parts.push_back(PartSpec{i, parent_of(j), joint_name(j)});
    }
    return PartTree(std::move(parts));
}

}  // namespace ps3d
