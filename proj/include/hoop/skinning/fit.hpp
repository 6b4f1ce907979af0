#pragma once

#include <optional>

#include "hoop/core/lm.hpp"
#include "hoop/core/rotation.hpp"
#include "hoop/court/camera.hpp"
#include "hoop/skinning/lbs.hpp"

namespace hoop::skinning {

struct FitConfig {
    double w3d = 100.0;     // per squared meter of joint error
    double w2d = 1e-2;      // per squared pixel
    double w_prior = 1e-3;  // per squared radian of local axis-angle
    int max_iterations = 100;
    double tolerance = 1e-12;  // cost decrease that still counts as progress

    void validate() const {
        require(w3d >= 0 && w2d >= 0 && w_prior >= 0, "fit loss weights must be nonnegative");
        require(max_iterations > 0, "fit needs at least one iteration");
    }
};

/// Skeleton-driven body. Joints come straight from forward kinematics; the mesh and weights are
/// optional and only used to report the posed surface.
struct FitModel {
    Skeleton skeleton;
    std::optional<BodyMesh> rest;
    std::optional<SkinningWeights> weights;
};

struct FitTargets {
    std::optional<Pose3D> joints3d;  // compared in its own frame
    std::optional<Pose2D> joints2d;  // invisible joints are ignored
    std::optional<Camera> camera;
};

struct FitResult {
    BoneTransforms transforms;
    Pose3D joints;  // world frame
    std::optional<BodyMesh> posed;
    std::vector<double> residual3d;  // meters per joint (empty without a 3D term)
    std::vector<double> residual2d;  // pixels per visible joint (empty without a 2D term)
    double initial_cost = 0, final_cost = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

namespace detail {

/// Inverse of the left Jacobian of SO(3) at axis-angle phi.
inline Mat3 inverse_left_jacobian(const Vec3& phi) {
    const double t = phi.norm();
    const Mat3 k = skew(phi);
    const double c = t < 1e-6 ? 1.0 / 12.0 : (1.0 / (t * t) - (1 + std::cos(t)) / (2 * t * std::sin(t)));
    return Mat3::Identity() - 0.5 * k + c * k * k;
}

inline std::vector<std::vector<bool>> ancestor_table(const Skeleton& s) {
    std::vector<std::vector<bool>> anc(s.size(), std::vector<bool>(s.size(), false));
    for (int k = 0; k < s.size(); ++k)
        for (int p = s.parent[k]; p >= 0; p = s.parent[p]) anc[k][p] = true;
    return anc;
}

}  // namespace detail

/// Fits local joint rotations and the root translation to 3D and/or 2D joint targets with an
/// axis-angle prior, by damped Gauss-Newton. Starts from `init` (identity when absent).
inline FitResult fit_pose_to_keypoints(const FitModel& model, const FitTargets& tgt, const FitConfig& cfg = {},
                                       const std::optional<BoneTransforms>& init = std::nullopt) {
    cfg.validate();
    const Skeleton& skel = model.skeleton;
    skel.validate();
    const int nj = skel.size();
    const bool use3 = tgt.joints3d && cfg.w3d > 0;
    const bool use2 = tgt.joints2d && cfg.w2d > 0;
    require(use3 || use2, "fit needs an active 3D or 2D keypoint term");
    if (use3) require(tgt.joints3d->size() == nj, "3D target joint count does not match the skeleton");
    std::vector<int> vis2;
    if (use2) {
        require(tgt.camera.has_value(), "the 2D term needs a camera");
        tgt.camera->validate();
        require(tgt.joints2d->size() == nj, "2D target joint count does not match the skeleton");
        require(static_cast<int>(tgt.joints2d->visible.size()) == nj, "2D target visibility size mismatch");
        for (int j = 0; j < nj; ++j)
            if (tgt.joints2d->visible[j]) vis2.push_back(j);
    }
    if (model.weights && model.rest)
        require(model.weights->num_vertices() == model.rest->total_vertices(), "model weights do not match its mesh");

    const bool relative = use3 && tgt.joints3d->frame == Frame::root_relative;
    const auto anc = detail::ancestor_table(skel);
    const double s3 = std::sqrt(cfg.w3d), s2 = std::sqrt(cfg.w2d), sp = std::sqrt(cfg.w_prior);
    const int n3 = use3 ? 3 * nj : 0, n2 = 2 * static_cast<int>(vis2.size()), np = cfg.w_prior > 0 ? 3 * nj : 0;
    const int dim = 3 * nj + 3;

    auto residual = [&](const BoneTransforms& st, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const auto g = global_transforms(skel, st);
        r.resize(n3 + n2 + np);
        if (J) J->setZero(r.size(), dim);
        // d x_k / d delta_j for j an ancestor of k: -skew(x_k - x_j) * R_parent(j)
        auto dpos = [&](int k, int j) -> Mat3 {
            const Mat3 rp = skel.parent[j] < 0 ? Mat3::Identity() : g[skel.parent[j]].rotation;
            return -skew(g[k].translation - g[j].translation) * rp;
        };
        if (use3) {
            const Vec3 root = g[0].translation;
            for (int k = 0; k < nj; ++k) {
                const Vec3 x = relative ? Vec3(g[k].translation - root) : g[k].translation;
                r.segment<3>(3 * k) = s3 * (x - tgt.joints3d->joint(k));
                if (!J) continue;
                for (int j = 0; j < nj; ++j)
                    if (anc[k][j]) J->block<3, 3>(3 * k, 3 * j) = s3 * dpos(k, j);
                if (!relative) J->block<3, 3>(3 * k, 3 * nj) = s3 * Mat3::Identity();
            }
        }
        if (use2) {
            const Camera& cam = *tgt.camera;
            for (size_t i = 0; i < vis2.size(); ++i) {
                const int k = vis2[i];
                const Vec3 xc = cam.to_camera(g[k].translation);
                if (!(xc.z() > 1e-9)) {
                    r.setConstant(std::numeric_limits<double>::quiet_NaN());
                    return;
                }
                const Vec2 p(cam.f * xc.x() / xc.z() + cam.px, cam.f * xc.y() / xc.z() + cam.py);
                r.segment<2>(n3 + 2 * i) = s2 * (p - tgt.joints2d->joint(k));
                if (!J) continue;
                Eigen::Matrix<double, 2, 3> dp;
                dp << cam.f / xc.z(), 0, -cam.f * xc.x() / (xc.z() * xc.z()), 0, cam.f / xc.z(),
                    -cam.f * xc.y() / (xc.z() * xc.z());
                const Eigen::Matrix<double, 2, 3> dw = s2 * dp * cam.R;
                for (int j = 0; j < nj; ++j)
                    if (anc[k][j]) J->block<2, 3>(n3 + 2 * i, 3 * j) = dw * dpos(k, j);
                J->block<2, 3>(n3 + 2 * i, 3 * nj) = dw;
            }
        }
        if (np) {
            for (int j = 0; j < nj; ++j) {
                const Vec3 phi = log_so3(st[j].rotation);
                r.segment<3>(n3 + n2 + 3 * j) = sp * phi;
                if (J) J->block<3, 3>(n3 + n2 + 3 * j, 3 * j) = sp * detail::inverse_left_jacobian(phi);
            }
        }
    };
    auto retract = [&](const BoneTransforms& st, const Eigen::VectorXd& d) {
        BoneTransforms out = st;
        for (int j = 0; j < nj; ++j) out[j].rotation = exp_so3(d.segment<3>(3 * j)) * st[j].rotation;
        out[0].translation += d.segment<3>(3 * nj);
        return out;
    };

    BoneTransforms state = init ? *init : identity_transforms(nj);
    require(static_cast<int>(state.size()) == nj, "initial transforms do not match the skeleton");
    LmOptions lo;
    lo.max_iterations = cfg.max_iterations;
    lo.min_improvement = cfg.tolerance;
    LmReport rep;
    try {
        rep = levenberg_marquardt(state, residual, retract, HalfSquaredNorm{}, lo);
    } catch (const NumericalError&) {
        throw NumericalError("keypoint fit residual is not finite at the initial pose");
    }

    FitResult out;
    out.transforms = state;
    out.joints = forward_kinematics(skel, state, Frame::world);
    if (model.rest && model.weights) out.posed = lbs(*model.rest, *model.weights, state, skel);
    if (use3) {
        const Pose3D cmp = relative ? to_root_relative(out.joints) : out.joints;
        for (int k = 0; k < nj; ++k) out.residual3d.push_back((cmp.joint(k) - tgt.joints3d->joint(k)).norm());
    }
    for (int k : vis2) out.residual2d.push_back((project(*tgt.camera, out.joints.joint(k)) - tgt.joints2d->joint(k)).norm());
    out.initial_cost = rep.initial_cost;
    out.final_cost = rep.final_cost;
    out.iterations = rep.iterations;
    out.converged = rep.converged || rep.stalled;
    out.history = rep.history;
    return out;
}

}  // namespace hoop::skinning
