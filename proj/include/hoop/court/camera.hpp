#pragma once

#include <optional>

#include "hoop/core/io.hpp"
#include "hoop/core/rotation.hpp"
#include "hoop/core/types.hpp"

namespace hoop {

/// Pinhole camera. World point X maps to camera coordinates R X + T; pixels are
/// f * (x/z, y/z) + (px, py) with image y pointing down.
struct Camera {
    double f = 1000.0;
    double px = 0.0;
    double py = 0.0;
    Mat3 R = Mat3::Identity();
    Vec3 T = Vec3::Zero();

    Vec3 to_camera(const Vec3& world) const { return R * world + T; }
    Vec3 center() const { return -R.transpose() * T; }

    void validate() const {
        require(f > 0 && std::isfinite(f), "focal length must be positive");
        require(std::isfinite(px) && std::isfinite(py) && T.allFinite(), "camera parameters must be finite");
        require(is_rotation(R, 1e-9), "camera rotation is not orthonormal");
    }
};

/// Camera at `eye` looking at `target`, world +y up.
inline Camera look_at(const Vec3& eye, const Vec3& target, double f, double px, double py,
                      const Vec3& up = Vec3::UnitY()) {
    const Vec3 z = (target - eye).normalized();
    const Vec3 x = z.cross(up).normalized();
    const Vec3 y = z.cross(x);
    Camera c;
    c.f = f;
    c.px = px;
    c.py = py;
    c.R.row(0) = x.transpose();
    c.R.row(1) = y.transpose();
    c.R.row(2) = z.transpose();
    c.T = -c.R * eye;
    return c;
}

inline std::optional<Vec2> try_project(const Camera& cam, const Vec3& world) {
    const Vec3 c = cam.to_camera(world);
    if (c.z() <= 0) return std::nullopt;
    return Vec2(cam.f * c.x() / c.z() + cam.px, cam.f * c.y() / c.z() + cam.py);
}

inline Vec2 project(const Camera& cam, const Vec3& world) {
    if (auto p = try_project(cam, world)) return *p;
    throw NumericalError("point is behind the camera");
}

inline Pose2D project_pose(const Camera& cam, const Pose3D& world) {
    require(world.frame == Frame::world, "projection needs a world-frame pose");
    Pose2D out = Pose2D::all_visible(Points2(world.size(), 2));
    for (int j = 0; j < world.size(); ++j) out.pixels.row(j) = project(cam, world.joint(j)).transpose();
    return out;
}

inline Json to_json(const Camera& c) {
    Json r = Json::array();
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r.push_back(c.R(i, k));
    return {{"f", c.f}, {"px", c.px}, {"py", c.py}, {"R", r}, {"T", vec_json(c.T)}};
}

inline Camera camera_from_json(const Json& j) {
    Camera c;
    c.f = j.at("f").get<double>();
    c.px = j.at("px").get<double>();
    c.py = j.at("py").get<double>();
    const auto& r = j.at("R");
    require(r.size() == 9, "camera R must be a row-major 9-vector");
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) c.R(i, k) = r[i * 3 + k].get<double>();
    c.T = json_vec3(j.at("T"));
    c.validate();
    return c;
}

}  // namespace hoop
