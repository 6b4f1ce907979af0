#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <vector>

#include "hoop/core/lm.hpp"
#include "hoop/court/camera.hpp"

namespace hoop::court {

struct Correspondence {
    Vec2 pixel;
    Vec3 court;  // on the y = 0 plane
};

struct PnpOptions {
    /// Known focal length. Needed when the court is viewed fronto-parallel, where the
    /// homography carries no focal information.
    std::optional<double> focal;
    /// Polish the closed-form solution by minimizing reprojection error.
    bool polish = true;
};

struct PnpResult {
    Camera camera;
    double mean_reprojection = 0;  // pixels
    double max_reprojection = 0;
};

namespace detail {

inline Eigen::Matrix3d normalizing_transform(const std::vector<Vec2>& pts) {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : pts) mean += p;
    mean /= double(pts.size());
    double d = 0;
    for (const auto& p : pts) d += (p - mean).norm();
    d /= double(pts.size());
    const double s = d > 0 ? std::sqrt(2.0) / d : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
    return t;
}

inline double triangle_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

/// Court-plane -> image homography by normalized DLT. Throws on rank deficiency.
inline Eigen::Matrix3d planar_homography(const std::vector<Vec2>& plane, const std::vector<Vec2>& image) {
    const auto tp = normalizing_transform(plane);
    const auto ti = normalizing_transform(image);
    const int n = static_cast<int>(plane.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 9);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d p = tp * plane[i].homogeneous();
        const Eigen::Vector3d q = ti * image[i].homogeneous();
        A.block<1, 3>(2 * i, 0) = p.transpose();
        A.block<1, 3>(2 * i, 6) = -q.x() * p.transpose();
        A.block<1, 3>(2 * i + 1, 3) = p.transpose();
        A.block<1, 3>(2 * i + 1, 6) = -q.y() * p.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // a unique solution needs an 8-dimensional row space
    if (sv.size() < 8 || sv(7) < 1e-9 * sv(0))
        throw ValidationError("degenerate correspondence configuration (homography is rank deficient)");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    return ti.inverse() * hn * tp;
}

}  // namespace detail

inline std::vector<double> reprojection_errors(const Camera& cam, const std::vector<Correspondence>& corr) {
    std::vector<double> e;
    for (const auto& c : corr) {
        auto p = try_project(cam, c.court);
        e.push_back(p ? (*p - c.pixel).norm() : std::numeric_limits<double>::infinity());
    }
    return e;
}

/// Camera from >= 4 image <-> court-plane correspondences. The principal point is fixed at the
/// image center; focal length, rotation and translation come from the plane homography.
inline PnpResult solve_pnp_planar(const std::vector<Correspondence>& corr, int width, int height,
                                  const PnpOptions& opt = {}) {
    require(corr.size() >= 4, "planar PnP needs at least four correspondences");
    require(width > 0 && height > 0, "image size must be positive");
    std::vector<Vec2> plane, image;
    for (const auto& c : corr) {
        require(c.pixel.allFinite() && c.court.allFinite(), "non-finite correspondence");
        require(std::abs(c.court.y()) < 1e-9, "court correspondences must lie on the y = 0 plane");
        plane.emplace_back(c.court.x(), c.court.z());
        image.push_back(c.pixel);
    }
    // collinearity: every triple for the minimal case, overall spread otherwise
    double extent = 0;
    for (const auto& p : plane) extent = std::max(extent, (p - plane[0]).norm());
    require(extent > 0, "degenerate correspondence configuration (coincident court points)");
    if (plane.size() == 4) {
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                for (int k = j + 1; k < 4; ++k)
                    if (detail::triangle_area2(plane[i], plane[j], plane[k]) < 1e-9 * extent * extent)
                        throw ValidationError("degenerate correspondence configuration (three collinear court points)");
    }
    const Eigen::Matrix3d H = detail::planar_homography(plane, image);

    Camera cam;
    cam.px = width / 2.0;
    cam.py = height / 2.0;
    Eigen::Matrix3d shift;
    shift << 1, 0, -cam.px, 0, 1, -cam.py, 0, 0, 1;
    const Eigen::Matrix3d h = shift * H;

    if (opt.focal) {
        require(*opt.focal > 0, "focal length must be positive");
        cam.f = *opt.focal;
    } else {
        // r1 . r3 = 0 and |r1| = |r3| in terms of w = 1/f^2
        const double a1 = h(0, 0) * h(0, 1) + h(1, 0) * h(1, 1), b1 = h(2, 0) * h(2, 1);
        const double a2 = h(0, 0) * h(0, 0) + h(1, 0) * h(1, 0) - h(0, 1) * h(0, 1) - h(1, 1) * h(1, 1);
        const double b2 = h(2, 0) * h(2, 0) - h(2, 1) * h(2, 1);
        const double den = a1 * a1 + a2 * a2;
        require(den > 0, "degenerate correspondence configuration (focal constraints vanish)");
        const double w = -(a1 * b1 + a2 * b2) / den;
        const double f = w > 0 ? 1.0 / std::sqrt(w) : 0.0;
        if (!(w > 0) || !std::isfinite(f))
            throw NumericalError("focal length solution is non-positive; the view may be fronto-parallel, supply a focal length");
        cam.f = f;
    }

    Eigen::Matrix3d m = h;
    m.row(0) /= cam.f;
    m.row(1) /= cam.f;
    double lambda = 2.0 / (m.col(0).norm() + m.col(1).norm());
    if (m(2, 2) * lambda < 0) lambda = -lambda;  // court in front of the camera
    const Vec3 r1 = lambda * m.col(0), r3 = lambda * m.col(1);
    Mat3 r;
    r.col(0) = r1;
    r.col(1) = r3.cross(r1);
    r.col(2) = r3;
    cam.R = nearest_rotation(r);
    cam.T = lambda * m.col(2);

    if (opt.polish) {
        struct State {
            Camera cam;
        };
        State st{cam};
        const bool free_focal = !opt.focal.has_value();
        const int dim = free_focal ? 7 : 6;
        auto residual = [&](const State& s, Eigen::VectorXd& res, Eigen::MatrixXd* J) {
            res.resize(2 * corr.size());
            if (J) J->setZero(2 * corr.size(), dim);
            for (size_t i = 0; i < corr.size(); ++i) {
                const Vec3 rx = s.cam.R * corr[i].court;
                const Vec3 xc = rx + s.cam.T;
                const double z = std::max(xc.z(), 1e-9);
                res(2 * i) = s.cam.f * xc.x() / z + s.cam.px - corr[i].pixel.x();
                res(2 * i + 1) = s.cam.f * xc.y() / z + s.cam.py - corr[i].pixel.y();
                if (!J) continue;
                Eigen::Matrix<double, 2, 3> dp;
                dp << s.cam.f / z, 0, -s.cam.f * xc.x() / (z * z), 0, s.cam.f / z, -s.cam.f * xc.y() / (z * z);
                J->block<2, 3>(2 * i, 0) = dp * (-skew(rx));
                J->block<2, 3>(2 * i, 3) = dp;
                if (free_focal) {
                    (*J)(2 * i, 6) = xc.x() / z;
                    (*J)(2 * i + 1, 6) = xc.y() / z;
                }
            }
        };
        auto retract = [&](const State& s, const Eigen::VectorXd& d) {
            State out = s;
            out.cam.R = exp_so3(d.head<3>()) * s.cam.R;
            out.cam.T = s.cam.T + d.segment<3>(3);
            if (free_focal) out.cam.f = s.cam.f + d(6);
            return out;
        };
        LmOptions lo;
        lo.min_improvement = 1e-16;
        levenberg_marquardt(st, residual, retract, HalfSquaredNorm{}, lo);
        if (st.cam.f > 0) cam = st.cam;
    }

    PnpResult out{cam, 0, 0};
    const auto e = reprojection_errors(cam, corr);
    for (double v : e) {
        out.mean_reprojection += v / double(e.size());
        out.max_reprojection = std::max(out.max_reprojection, v);
    }
    return out;
}

}  // namespace hoop::court
