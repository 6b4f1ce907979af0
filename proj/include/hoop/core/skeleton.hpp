#pragma once

#include <string>
#include <vector>

#include "hoop/core/rotation.hpp"
#include "hoop/core/types.hpp"

namespace hoop {

namespace detail {
struct JointSpec {
    const char* name;
    int parent;
    double x, y, z;
};

// Mirrors data/skeleton35.json (schema version 1).
inline constexpr JointSpec kCanonicalJoints[kNumJoints] = {
    {"pelvis", -1, 0, 0, 0},
    {"spine", 0, 0, 0.15, 0},
    {"chest", 1, 0, 0.20, 0},
    {"neck", 2, 0, 0.18, 0},
    {"head", 3, 0, 0.10, 0},
    {"head_top", 4, 0, 0.14, 0},
    {"nose", 4, 0, 0.04, 0.10},
    {"left_eye", 4, 0.035, 0.07, 0.08},
    {"right_eye", 4, -0.035, 0.07, 0.08},
    {"left_clavicle", 2, 0.04, 0.14, 0},
    {"left_shoulder", 9, 0.15, 0, 0},
    {"left_elbow", 10, 0.30, 0, 0},
    {"left_wrist", 11, 0.27, 0, 0},
    {"left_thumb_tip", 12, 0.05, 0, 0.06},
    {"left_index_tip", 12, 0.17, 0, 0.03},
    {"left_middle_tip", 12, 0.18, 0, 0.01},
    {"left_ring_tip", 12, 0.17, 0, -0.01},
    {"left_pinky_tip", 12, 0.14, 0, -0.03},
    {"right_clavicle", 2, -0.04, 0.14, 0},
    {"right_shoulder", 18, -0.15, 0, 0},
    {"right_elbow", 19, -0.30, 0, 0},
    {"right_wrist", 20, -0.27, 0, 0},
    {"right_thumb_tip", 21, -0.05, 0, 0.06},
    {"right_index_tip", 21, -0.17, 0, 0.03},
    {"right_middle_tip", 21, -0.18, 0, 0.01},
    {"right_ring_tip", 21, -0.17, 0, -0.01},
    {"right_pinky_tip", 21, -0.14, 0, -0.03},
    {"left_hip", 0, 0.10, -0.05, 0},
    {"left_knee", 27, 0, -0.45, 0},
    {"left_ankle", 28, 0, -0.43, 0},
    {"left_toe", 29, 0, -0.07, 0.16},
    {"right_hip", 0, -0.10, -0.05, 0},
    {"right_knee", 31, 0, -0.45, 0},
    {"right_ankle", 32, 0, -0.43, 0},
    {"right_toe", 33, 0, -0.07, 0.16},
};
}  // namespace detail

inline constexpr int kSkeletonSchemaVersion = 1;

/// The built-in 35-joint skeleton (T-pose rest, y up, facing +z).
inline Skeleton canonical_skeleton() {
    Skeleton s;
    for (const auto& j : detail::kCanonicalJoints) {
        s.joint_names.emplace_back(j.name);
        s.parent.push_back(j.parent);
        s.rest_offsets.emplace_back(j.x, j.y, j.z);
    }
    return s;
}

inline std::vector<std::string> lsp14_joint_names() {
    return {"right_ankle",    "right_knee",    "right_hip",  "left_hip",   "left_knee",
            "left_ankle",     "right_wrist",   "right_elbow", "right_shoulder", "left_shoulder",
            "left_elbow",     "left_wrist",    "neck",       "head_top"};
}

inline std::vector<int> joint_subset(const Skeleton& s, const std::vector<std::string>& names) {
    std::vector<int> idx;
    for (const auto& n : names) idx.push_back(s.index_of(n));
    return idx;
}

/// Global (world) transform of every joint frame.
inline std::vector<RigidTransform> global_transforms(const Skeleton& skel, const BoneTransforms& local) {
    require(static_cast<int>(local.size()) == skel.size(),
            "expected " + std::to_string(skel.size()) + " bone transforms, got " + std::to_string(local.size()));
    std::vector<RigidTransform> g(skel.size());
    for (int j = 0; j < skel.size(); ++j) {
        if (!is_rotation(local[j].rotation, 1e-6))
            throw ValidationError("bone transform " + std::to_string(j) + " is not a rotation");
        const RigidTransform m{local[j].rotation, skel.rest_offsets[j] + local[j].translation};
        g[j] = skel.parent[j] < 0 ? m : g[skel.parent[j]] * m;
    }
    return g;
}

/// Joint positions from composed parent-to-child transforms.
inline Pose3D forward_kinematics(const Skeleton& skel, const BoneTransforms& local,
                                 Frame frame = Frame::root_relative) {
    const auto g = global_transforms(skel, local);
    Pose3D pose;
    pose.frame = frame;
    pose.positions.resize(skel.size(), 3);
    for (int j = 0; j < skel.size(); ++j) pose.positions.row(j) = g[j].translation.transpose();
    if (frame == Frame::root_relative) {
        const Eigen::RowVector3d root = pose.positions.row(0);
        pose.positions.rowwise() -= root;
    }
    return pose;
}

/// Rest pose positions (all-identity transforms), root-relative.
inline Pose3D rest_pose(const Skeleton& skel) {
    return forward_kinematics(skel, identity_transforms(skel.size()));
}

inline std::vector<double> bone_lengths(const Pose3D& pose, const std::vector<std::array<int, 2>>& edges) {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        require(a >= 0 && a < pose.size() && b >= 0 && b < pose.size(), "bone edge index out of range");
        out.push_back((pose.positions.row(a) - pose.positions.row(b)).norm());
    }
    return out;
}

inline Pose3D to_root_relative(const Pose3D& p) {
    Pose3D out = p;
    const Eigen::RowVector3d root = p.positions.row(0);
    out.positions.rowwise() -= root;
    out.frame = Frame::root_relative;
    return out;
}

}  // namespace hoop
