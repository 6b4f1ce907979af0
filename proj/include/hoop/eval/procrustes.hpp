#pragma once

#include <Eigen/SVD>

#include "hoop/core/types.hpp"

namespace hoop::eval {

struct Similarity {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Points3 apply(const Points3& x) const {
        Points3 out = (scale * (x * rotation.transpose())).rowwise() + translation.transpose();
        return out;
    }
};

struct ProcrustesResult {
    Similarity transform;
    Points3 aligned;
    double residual_before = 0;  // sum of squared distances
    double residual = 0;
    bool degenerate = false;  // covariance rank below 2 or a single repeated point
};

inline double sum_squared_distance(const Points3& a, const Points3& b) { return (a - b).squaredNorm(); }

/// Closed-form least-squares similarity (or rigid, without scale) taking X onto Y.
inline ProcrustesResult procrustes_align(const Points3& x, const Points3& y, bool with_scale = true) {
    require(x.rows() == y.rows(), "Procrustes point sets differ in size");
    require(x.rows() >= 3, "Procrustes needs at least 3 points");
    require(x.allFinite() && y.allFinite(), "Procrustes inputs are not finite");
    const double k = static_cast<double>(x.rows());
    const Vec3 mx = x.colwise().mean().transpose(), my = y.colwise().mean().transpose();
    const Points3 xc = x.rowwise() - mx.transpose(), yc = y.rowwise() - my.transpose();
    const double var_x = xc.squaredNorm() / k;
    ProcrustesResult r;
    r.residual_before = sum_squared_distance(x, y);
    if (var_x <= 1e-300) {
        r.degenerate = true;
        r.transform.translation = my - mx;
    } else {
        const Mat3 cov = yc.transpose() * xc / k;
        Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec3 sv = svd.singularValues();
        r.degenerate = sv(1) <= 1e-12 * std::max(sv(0), 1e-300);
        Vec3 d(1, 1, 1);
        if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) d(2) = -1;  // no reflections
        r.transform.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
        if (with_scale) r.transform.scale = sv.dot(d) / var_x;
        r.transform.translation = my - r.transform.scale * r.transform.rotation * mx;
    }
    r.aligned = r.transform.apply(x);
    r.residual = sum_squared_distance(r.aligned, y);
    return r;
}

}  // namespace hoop::eval
