#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "hoop/core/primitives.hpp"
#include "hoop/core/skeleton.hpp"
#include "hoop/court/pnp.hpp"
#include "hoop/court/raster.hpp"
#include "hoop/posemap/codec.hpp"
#include "hoop/skinning/heat.hpp"
#include "hoop/skinning/lbs.hpp"

namespace hoop::synth {

using Rng = std::mt19937_64;

struct Range {
    double lo = 0, hi = 0;

    double sample(Rng& rng) const { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng); }
    bool valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
};

struct SynthConfig {
    int width = 1280;
    int height = 720;
    court::CourtConfig court;
    Range elevation{5, 15};        // camera height, meters
    Range focal{800, 3000};        // pixels
    Range setback{8, 20};          // camera distance behind the near sideline
    Range camera_x{-8, 8};         // along the court length
    Range target_x{-10, 10};       // look-at point on the floor
    Range target_z{-3, 3};
    double player_spread = 3.0;    // player root within this many meters of the look-at point
    double jump_probability = 0.5;
    Range jump{0.15, 1.2};
    std::optional<double> jump_height;  // fixes the height instead of sampling it
    double pose_sigma_deg = 12.0;  // per-bone random rotation
    int heat_resolution = 48;
    int max_attempts = 200;
    double frame_margin = 10.0;    // pixels kept free around the player

    void validate() const {
        require(width > 0 && height > 0, "image size must be positive");
        require(elevation.valid() && focal.valid() && setback.valid() && camera_x.valid() && target_x.valid() &&
                    target_z.valid() && jump.valid(),
                "every range needs finite bounds with lo <= hi");
        require(elevation.lo > 0 && focal.lo > 0, "camera elevation and focal length must be positive");
        require(jump.lo >= 0, "jump heights must be nonnegative");
        require(!jump_height || (std::isfinite(*jump_height) && *jump_height >= 0), "fixed jump height must be nonnegative");
        require(jump_probability >= 0 && jump_probability <= 1, "jump probability must lie in [0, 1]");
        require(player_spread >= 0 && pose_sigma_deg >= 0 && frame_margin >= 0, "spreads and margins must be nonnegative");
        require(heat_resolution >= 8, "heat resolution must be at least 8");
        require(max_attempts > 0, "need at least one sampling attempt");
    }
};

/// Square region of the frame that maps onto the pose-map crop.
struct Crop {
    Vec2 origin = Vec2::Zero();
    double scale = 1.0;  // crop pixels per frame pixel

    Vec2 to_crop(const Vec2& p) const { return (p - origin) * scale; }
    Vec2 to_frame(const Vec2& p) const { return p / scale + origin; }
    Pose2D to_crop(const Pose2D& p) const {
        Pose2D out = p;
        for (int j = 0; j < p.size(); ++j) out.pixels.row(j) = to_crop(p.joint(j)).transpose();
        return out;
    }
};

/// Crop centered on the joints' bounding box, 20 % larger than its longer side.
inline Crop crop_around(const Pose2D& pose) {
    const Vec2 lo = pose.pixels.colwise().minCoeff().transpose(), hi = pose.pixels.colwise().maxCoeff().transpose();
    const double side = std::max(1.2 * (hi - lo).maxCoeff(), 1.0);
    return {0.5 * (lo + hi) - Vec2::Constant(side / 2), kCropSize / side};
}

struct SceneBundle {
    std::uint64_t seed = 0;
    int width = 0, height = 0;
    court::CourtConfig court_config;
    court::CourtModel court;
    Camera camera;
    Skeleton skeleton;
    BoneTransforms transforms;
    Pose3D pose3d;        // root-relative
    Pose3D world;         // world frame
    Pose2D pose2d;        // frame pixels
    Vec3 translation = Vec3::Zero();  // root-relative to world
    JumpInfo jump;
    Crop crop;
    BodyMesh rest;        // around the rest skeleton, pelvis at the origin
    skinning::SkinningWeights weights;
    BodyMesh posed;       // world frame
    court::LineMask mask;

    std::vector<court::Correspondence> visible_keypoints() const {
        std::vector<court::Correspondence> out;
        for (const auto& k : court.keypoints)
            if (auto p = try_project(camera, k); p && p->x() >= 0 && p->y() >= 0 && p->x() < width && p->y() < height)
                out.push_back({*p, k});
        return out;
    }
};

/// Six-part mannequin of capsules around the rest skeleton. Parts keep clear of each other's
/// garments by more than the default collision band at rest.
inline BodyMesh capsule_body(const Skeleton& skel) {
    const Pose3D rest = rest_pose(skel);
    auto at = [&](const char* name) { return rest.joint(skel.index_of(name)); };
    const Vec3 up = Vec3::UnitY();
    BodyMesh body;
    body.parts.push_back(capsule(at("neck") + 0.16 * up, at("neck") + 0.19 * up, 0.08, 16, 2, 6, Part::head));
    std::vector<PartMesh> arms, pants, legs, shoes;
    for (const char* side : {"left", "right"}) {
        const std::string s(side);
        arms.push_back(capsule(at((s + "_shoulder").c_str()), at((s + "_wrist").c_str()), 0.04, 12, 16, 3));
        arms.push_back(capsule(at((s + "_wrist").c_str()), at((s + "_middle_tip").c_str()), 0.03, 10, 3, 3));
        const Vec3 hip = at((s + "_hip").c_str()), knee = at((s + "_knee").c_str()), ankle = at((s + "_ankle").c_str());
        pants.push_back(capsule(hip, knee, 0.075, 16, 10, 4));
        legs.push_back(capsule(knee + (ankle - knee).normalized() * 0.19, ankle, 0.05, 12, 8, 3));
        shoes.push_back(capsule(ankle, at((s + "_toe").c_str()), 0.045, 12, 3, 3));
    }
    body.parts.push_back(concatenate(arms, Part::arms));
    body.parts.push_back(capsule(at("pelvis"), at("spine") + 0.3 * up, 0.085, 20, 12, 5, Part::shirt));
    body.parts.push_back(concatenate(pants, Part::pants));
    body.parts.push_back(concatenate(legs, Part::legs));
    body.parts.push_back(concatenate(shoes, Part::shoes));
    return body;
}

namespace detail {

/// Whether some four of the court points have no three (nearly) collinear, which a plane
/// homography needs. Triangles must span more than `min_area` square meters.
inline bool has_general_quad(const std::vector<court::Correspondence>& c, double min_area = 1.0) {
    const size_t n = c.size();
    auto area = [&](size_t i, size_t j, size_t k) {
        return 0.5 * (c[j].court - c[i].court).cross(c[k].court - c[i].court).norm();
    };
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            for (size_t k = j + 1; k < n; ++k) {
                if (area(i, j, k) <= min_area) continue;
                for (size_t l = k + 1; l < n; ++l)
                    if (area(i, j, l) > min_area && area(i, k, l) > min_area && area(j, k, l) > min_area) return true;
            }
    return false;
}

inline bool in_frame(const Pose2D& p, int w, int h, double margin) {
    for (int j = 0; j < p.size(); ++j) {
        const Vec2 q = p.joint(j);
        if (!(q.x() >= margin && q.y() >= margin && q.x() < w - margin && q.y() < h - margin)) return false;
    }
    return true;
}

inline void check(bool ok, const std::string& what, std::uint64_t seed) {
    if (!ok) throw NumericalError("synthetic scene " + std::to_string(seed) + " failed its self-check: " + what);
}

}  // namespace detail

/// Every invariant a generated bundle has to satisfy. Throws on the first violation.
inline void self_check(const SceneBundle& b) {
    const auto seed = b.seed;
    detail::check(b.world.frame == Frame::world && b.pose3d.frame == Frame::root_relative, "pose frames", seed);
    const Pose2D proj = project_pose(b.camera, b.world);
    detail::check(proj.pixels == b.pose2d.pixels, "2D pose is not the projection of the world pose", seed);
    detail::check(b.jump.airborne == (b.jump.height > kJumpThreshold), "jump class disagrees with its height", seed);
    const double lowest = b.world.positions.col(1).minCoeff();
    detail::check(std::abs(lowest - b.jump.height) < 1e-9, "lowest joint is not at the jump height", seed);
    auto visible = b.visible_keypoints();
    detail::check(detail::has_general_quad(visible), "no four court keypoints in general position", seed);
    detail::check(b.mask.count_nonzero() > 0, "empty line mask", seed);
    b.weights.validate(1e-9);
    detail::check(b.weights.num_vertices() == b.rest.total_vertices(), "weights do not cover the body", seed);

    const Pose2D crop = b.crop.to_crop(b.pose2d);
    const auto heat = posemap::encode_heatmaps(crop);
    detail::check(heat.clamped.empty(), "joints fall outside the pose crop", seed);
    const Pose2D decoded = posemap::decode_heatmaps(heat.maps);
    detail::check((decoded.pixels - crop.pixels).cwiseAbs().maxCoeff() <= 2.0, "pose-map round trip exceeds 2 px", seed);
    const Pose3D loc = posemap::decode_location_maps(posemap::encode_location_maps(b.pose3d, crop), heat.maps);
    detail::check((loc.positions - b.pose3d.positions).cwiseAbs().maxCoeff() <= 1e-9, "location-map round trip", seed);
}

/// Deterministic scene for (seed, config): broadcast camera, posed and placed capsule player,
/// its skinned body and the court line mask.
inline SceneBundle synth_scene(std::uint64_t seed, const SynthConfig& cfg = {}) {
    cfg.validate();
    Rng rng(seed);
    SceneBundle b;
    b.seed = seed;
    b.width = cfg.width;
    b.height = cfg.height;
    b.court_config = cfg.court;
    b.court = court::make_court_model(cfg.court);
    b.skeleton = canonical_skeleton();
    const int nj = b.skeleton.size();

    // player pose and jump first, so the camera search below only redraws geometry
    std::normal_distribution<double> normal(0, 1);
    const double sigma = cfg.pose_sigma_deg * std::numbers::pi / 180.0;
    b.transforms = identity_transforms(nj);
    for (int j = 1; j < nj; ++j) b.transforms[j].rotation = exp_so3(sigma * Vec3(normal(rng), normal(rng), normal(rng)));
    const double yaw = std::uniform_real_distribution<double>(0, 2 * std::numbers::pi)(rng);
    b.transforms[0].rotation = exp_so3(yaw * Vec3::UnitY());
    b.pose3d = forward_kinematics(b.skeleton, b.transforms);
    double h = 0;
    if (cfg.jump_height)
        h = *cfg.jump_height;
    else if (std::uniform_real_distribution<double>(0, 1)(rng) < cfg.jump_probability)
        h = cfg.jump.sample(rng);
    b.jump = JumpInfo::from_height(h);
    const double lift = h - b.pose3d.positions.col(1).minCoeff();

    const double hw = b.court.width() / 2, hl = b.court.length() / 2;
    bool found = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !found; ++attempt) {
        const Vec3 eye(cfg.camera_x.sample(rng), cfg.elevation.sample(rng), -hw - cfg.setback.sample(rng));
        const Vec3 target(cfg.target_x.sample(rng), 0, cfg.target_z.sample(rng));
        const double f = cfg.focal.sample(rng);
        const Vec3 root(std::clamp(target.x() + cfg.player_spread * (2 * std::uniform_real_distribution<double>(0, 1)(rng) - 1), -hl, hl),
                        lift,
                        std::clamp(target.z() + cfg.player_spread * (2 * std::uniform_real_distribution<double>(0, 1)(rng) - 1), -hw, hw));
        if ((target - eye).cross(Vec3::UnitY()).norm() < 1e-9) continue;
        b.camera = look_at(eye, target, f, cfg.width / 2.0, cfg.height / 2.0);
        const auto visible = b.visible_keypoints();
        if (!detail::has_general_quad(visible)) continue;
        b.translation = root;
        b.world.frame = Frame::world;
        b.world.positions = b.pose3d.positions.rowwise() + root.transpose();
        bool in_front = true;
        for (int j = 0; j < nj; ++j) in_front = in_front && b.camera.to_camera(b.world.joint(j)).z() > 0.5;
        if (!in_front) continue;
        b.pose2d = project_pose(b.camera, b.world);
        found = detail::in_frame(b.pose2d, cfg.width, cfg.height, cfg.frame_margin);
    }
    if (!found)
        throw ValidationError("infeasible camera config: no camera with four usable court keypoints and the whole player in frame after " +
                              std::to_string(cfg.max_attempts) + " attempts");

    b.crop = crop_around(b.pose2d);
    b.rest = capsule_body(b.skeleton);
    skinning::HeatOptions heat;
    heat.resolution = cfg.heat_resolution;
    b.weights = skinning::heat_diffusion_weights(b.rest, b.skeleton, rest_pose(b.skeleton), heat);
    b.posed = skinning::lbs(b.rest, b.weights, b.transforms, b.skeleton);
    for (auto& p : b.posed.parts) p.vertices.rowwise() += b.translation.transpose();
    b.mask = court::rasterize_court_lines(b.camera, b.court, cfg.width, cfg.height);
    self_check(b);
    return b;
}

}  // namespace hoop::synth
