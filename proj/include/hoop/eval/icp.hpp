#pragma once

#include "hoop/eval/kdtree.hpp"
#include "hoop/eval/procrustes.hpp"

namespace hoop::eval {

struct IcpResult {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    Points3 aligned;
    std::vector<double> residuals;  // mean squared nearest distance, starting before the first step
    int iterations = 0;
    bool converged = false;
};

/// Rigid point-to-point ICP moving A onto B.
inline IcpResult icp(const Points3& a, const Points3& b, int max_iters = 50, double tol = 1e-8) {
    require(a.rows() > 0 && b.rows() > 0, "ICP of an empty point set");
    require(a.allFinite() && b.allFinite(), "ICP inputs are not finite");
    const KdTree tree(b);
    IcpResult r;
    r.aligned = a;
    Points3 matched(a.rows(), 3);
    auto correspond = [&] {
        double s = 0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const auto h = tree.nearest(r.aligned.row(i).transpose());
            matched.row(i) = b.row(h.index);
            s += h.dist2;
        }
        return s / static_cast<double>(a.rows());
    };
    r.residuals.push_back(correspond());
    r.converged = r.residuals.front() == 0;
    if (r.converged || a.rows() < 3) return r;
    for (int it = 0; it < max_iters; ++it) {
        const auto fit = procrustes_align(a, matched, false);
        const Points3 cand = fit.transform.apply(a);
        // with fixed correspondences the closed form never does worse than the current pose
        if ((cand - matched).squaredNorm() > (r.aligned - matched).squaredNorm()) break;
        r.rotation = fit.transform.rotation;
        r.translation = fit.transform.translation;
        r.aligned = cand;
        const double prev = r.residuals.back();
        r.residuals.push_back(correspond());
        ++r.iterations;
        const double cur = r.residuals.back();
        if (cur == 0 || (prev - cur) <= tol * std::max(prev, 1e-300)) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace hoop::eval
