#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "hoop/core/types.hpp"

namespace hoop {

inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return s;
}

/// Rodrigues: axis-angle vector to rotation matrix.
inline Mat3 exp_so3(const Vec3& w) {
    const double theta = w.norm();
    const Mat3 k = skew(w);
    if (theta < 1e-8) return Mat3::Identity() + k + 0.5 * k * k;
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Mat3::Identity() + a * k + b * k * k;
}

inline Vec3 log_so3(const Mat3& r) {
    Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
}

/// Closest rotation (Frobenius sense) to an arbitrary 3x3 matrix, det forced to +1.
inline Mat3 nearest_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0) u.col(2) *= -1.0;
    return u * v.transpose();
}

inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
    const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

}  // namespace hoop
