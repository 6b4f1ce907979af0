#pragma once

#include "hoop/core/skeleton.hpp"
#include "hoop/skinning/weights.hpp"

namespace hoop::skinning {

/// Rest-to-posed transform of every joint: G_j * inverse(G_j at rest).
inline std::vector<RigidTransform> skinning_matrices(const Skeleton& skel, const BoneTransforms& local) {
    const auto posed = global_transforms(skel, local);
    const auto rest = global_transforms(skel, identity_transforms(skel.size()));
    std::vector<RigidTransform> a(skel.size());
    for (int j = 0; j < skel.size(); ++j) a[j] = posed[j] * rest[j].inverse();
    return a;
}

/// Linear blend skinning with explicit per-joint rest-to-posed transforms.
inline BodyMesh lbs(const BodyMesh& rest, const SkinningWeights& weights, const std::vector<RigidTransform>& joint_mats) {
    require(weights.num_vertices() == rest.total_vertices(),
            "skinning weights cover " + std::to_string(weights.num_vertices()) + " vertices, mesh has " +
                std::to_string(rest.total_vertices()));
    require(weights.num_joints() == static_cast<int>(joint_mats.size()),
            "skinning weights cover " + std::to_string(weights.num_joints()) + " joints, got " +
                std::to_string(joint_mats.size()) + " transforms");
    const PartMesh m = rest.merged();
    Points3 out(m.num_vertices(), 3);
    for (int v = 0; v < m.num_vertices(); ++v) {
        const Vec3 x = m.vertex(v);
        Vec3 acc = Vec3::Zero();
        for (SparseMatrix::InnerIterator it(weights.W, v); it; ++it) acc += it.value() * joint_mats[it.col()].apply(x);
        out.row(v) = acc.transpose();
    }
    BodyMesh posed = rest;
    posed.scatter(out);
    return posed;
}

inline BodyMesh lbs(const BodyMesh& rest, const SkinningWeights& weights, const BoneTransforms& local,
                    const Skeleton& skel) {
    return lbs(rest, weights, skinning_matrices(skel, local));
}

}  // namespace hoop::skinning
