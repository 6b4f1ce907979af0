#pragma once

#include "hoop/core/io.hpp"
#include "hoop/eval/kdtree.hpp"
#include "hoop/eval/procrustes.hpp"

namespace hoop::eval {

inline constexpr double kMillimeters = 1000.0;

/// Joint indices of a named subset file ({"schema": "hoop.joint_subset", "joints": [...]}).
inline std::vector<int> load_joint_subset(const std::string& path, const Skeleton& skel) {
    const auto j = read_json(path);
    require(j.value("schema", "") == "hoop.joint_subset", path + ": not a joint subset file");
    require(j.value("version", 0) == 1, path + ": unsupported joint subset version");
    return joint_subset(skel, j.at("joints").get<std::vector<std::string>>());
}

inline std::vector<int> lsp14_indices(const Skeleton& skel = canonical_skeleton()) {
    return joint_subset(skel, lsp14_joint_names());
}

namespace detail {
inline double mean_distance_mm(const Points3& a, const Points3& b, bool procrustes) {
    const Points3 moved = procrustes ? procrustes_align(a, b, true).aligned : a;
    return kMillimeters * (moved - b).rowwise().norm().mean();
}
}  // namespace detail

/// Mean per-joint position error in mm over `subset`, optionally after similarity alignment.
inline double mpjpe(const Pose3D& pred, const Pose3D& gt, const std::vector<int>& subset, bool procrustes) {
    require(!subset.empty(), "MPJPE needs a nonempty joint subset");
    Points3 a(subset.size(), 3), b(subset.size(), 3);
    for (size_t i = 0; i < subset.size(); ++i) {
        const int j = subset[i];
        require(j >= 0 && j < pred.size() && j < gt.size(),
                "joint " + std::to_string(j) + " is missing from the " + (j < pred.size() ? "ground truth" : "prediction"));
        a.row(i) = pred.positions.row(j);
        b.row(i) = gt.positions.row(j);
    }
    return detail::mean_distance_mm(a, b, procrustes);
}

/// Mean per-vertex position error in mm with one-to-one correspondence.
inline double mpvpe(const Points3& pred, const Points3& gt, bool procrustes) {
    require(pred.rows() == gt.rows(), "MPVPE vertex counts differ: " + std::to_string(pred.rows()) + " vs " +
                                          std::to_string(gt.rows()));
    require(pred.rows() > 0, "MPVPE of empty meshes");
    return detail::mean_distance_mm(pred, gt, procrustes);
}

inline double mean_nearest_squared(const Points3& from, const KdTree& to) {
    double s = 0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) s += to.nearest(from.row(i).transpose()).dist2;
    return s / static_cast<double>(from.rows());
}

/// Symmetric mean of squared nearest-neighbour distances, times 1000.
inline double chamfer(const Points3& a, const Points3& b) {
    require(a.rows() > 0 && b.rows() > 0, "Chamfer distance of an empty point set");
    return kMillimeters * (mean_nearest_squared(a, KdTree(b)) + mean_nearest_squared(b, KdTree(a)));
}

}  // namespace hoop::eval
