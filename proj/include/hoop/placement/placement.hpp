#pragma once

#include <cmath>
#include <limits>

#include "hoop/court/camera.hpp"

namespace hoop::placement {

/// Visible joint with the smallest up-coordinate in the root-relative pose. Ties go to the joint
/// drawn lower in the image (larger pixel y), then to the lower index.
inline int lowest_joint(const Pose2D& pose2d, const Pose3D& pose3d) {
    require(pose2d.size() == pose3d.size(), "2D and 3D poses have different joint counts");
    require(static_cast<int>(pose2d.visible.size()) == pose2d.size(), "visibility flags do not match the 2D pose");
    int best = -1;
    for (int j = 0; j < pose3d.size(); ++j) {
        if (!pose2d.visible[j]) continue;
        if (best < 0) {
            best = j;
            continue;
        }
        const double y = pose3d.positions(j, 1), yb = pose3d.positions(best, 1);
        if (y < yb || (y == yb && pose2d.pixels(j, 1) > pose2d.pixels(best, 1))) best = j;
    }
    if (best < 0) throw ValidationError("no visible joints to place the player by");
    return best;
}

struct DepthSolution {
    double depth = 0;  // camera-frame z
    Vec3 world;
};

/// Point on the camera ray through `pixel` whose world height is `h`.
inline DepthSolution solve_depth_for_height(const Camera& cam, const Vec2& pixel, double h) {
    cam.validate();
    require(pixel.allFinite() && std::isfinite(h), "non-finite pixel or height");
    const Vec3 d((pixel.x() - cam.px) / cam.f, (pixel.y() - cam.py) / cam.f, 1.0);
    // world y of z*d is r2 . (z d - T), with r2 the second column of R
    const Vec3 r2 = cam.R.col(1);
    const double slope = r2.dot(d);
    if (std::abs(slope) <= 1e-9) throw NumericalError("camera ray is parallel to the target height plane");
    const double z = (h + r2.dot(cam.T)) / slope;
    if (!(z > 0)) throw NumericalError("target height plane is behind the camera along this ray");
    return {z, cam.R.transpose() * (z * d - cam.T)};
}

struct Placement {
    Pose3D world;
    Vec3 translation = Vec3::Zero();  // added to every root-relative joint (and mesh vertex)
    int anchor_joint = -1;
    double height = 0;  // height the anchor joint was placed at
};

/// Places a root-relative pose in the world: the lowest visible joint goes where its image ray
/// reaches the effective jump height, and the rest of the pose follows by the same translation.
inline Placement place_player(const Camera& cam, const Pose2D& pose2d, const Pose3D& pose3d, const JumpInfo& jump) {
    require(pose3d.frame == Frame::root_relative, "placement expects a root-relative 3D pose");
    require(std::isfinite(jump.height) && jump.height >= 0, "jump height must be finite and nonnegative");
    Placement out;
    out.anchor_joint = lowest_joint(pose2d, pose3d);
    out.height = jump.effective_height();
    const auto sol = solve_depth_for_height(cam, pose2d.joint(out.anchor_joint), out.height);
    out.translation = sol.world - pose3d.joint(out.anchor_joint);
    out.world.frame = Frame::world;
    out.world.positions = pose3d.positions.rowwise() + out.translation.transpose();
    // the anchor itself is set exactly, without the round trip through the translation
    out.world.positions.row(out.anchor_joint) = sol.world.transpose();
    return out;
}

}  // namespace hoop::placement
