#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hoop/core/skeleton.hpp"
#include "hoop/posemap/codec.hpp"

namespace hoop::posemap {

struct PoseLossWeights {
    double w2d = 10.0;
    double w3d = 10.0;
    double wbl = 0.5;
    double wjht = 0.4;
    double wjcls = 0.2;
};

/// Network-style outputs (or ground-truth targets, with a 0/1 airborne probability).
struct PoseMaps {
    HeatmapStack heat;
    LocationMapStack loc;
    double jump_height = 0.0;
    double airborne_probability = 0.0;

    static PoseMaps target(HeatmapStack h, LocationMapStack l, const JumpInfo& jump) {
        return {std::move(h), std::move(l), jump.height, jump.airborne ? 1.0 : 0.0};
    }
};

struct PoseLossTerms {
    double heatmap = 0;      // mean |H - H^|
    double location = 0;     // mean |L - L^|
    double bone_length = 0;  // mean |B - B^|
    double jump_height = 0;  // |h - h^|
    double jump_class = 0;   // binary cross-entropy
    double total = 0;
};

inline constexpr double kProbabilityFloor = 1e-7;

inline double binary_cross_entropy(double p, double target) {
    p = std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

inline double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "L1 operands differ in size");
    if (a.empty()) return 0.0;
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

/// Weighted sum of the five pose-network terms. Bone lengths come from the decoded predicted pose.
inline PoseLossTerms pose_loss(const PoseMaps& pred, const PoseMaps& gt, const std::vector<std::array<int, 2>>& edges,
                               const std::vector<double>& gt_bone_lengths, const PoseLossWeights& w = {}) {
    require(pred.heat.joints == gt.heat.joints && pred.heat.resolution == gt.heat.resolution,
            "heatmap shapes differ");
    require(pred.loc.joints == gt.loc.joints && pred.loc.resolution == gt.loc.resolution,
            "location map shapes differ");
    require(edges.size() == gt_bone_lengths.size(), "one ground-truth length per bone edge");
    PoseLossTerms t;
    t.heatmap = mean_abs_diff(pred.heat.values, gt.heat.values);
    t.location = mean_abs_diff(pred.loc.values, gt.loc.values);
    t.bone_length = mean_abs_diff(bone_lengths(decode_location_maps(pred.loc, pred.heat), edges), gt_bone_lengths);
    t.jump_height = std::abs(pred.jump_height - gt.jump_height);
    t.jump_class = binary_cross_entropy(pred.airborne_probability, gt.airborne_probability);
    t.total = w.w2d * t.heatmap + w.w3d * t.location + w.wbl * t.bone_length + w.wjht * t.jump_height +
              w.wjcls * t.jump_class;
    return t;
}

}  // namespace hoop::posemap
