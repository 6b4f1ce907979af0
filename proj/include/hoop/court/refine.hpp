#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "hoop/core/lm.hpp"
#include "hoop/court/raster.hpp"

namespace hoop::court {

struct RefineOptions {
    int max_iterations = 100;         // per LM stage
    double min_improvement = 1e-8;    // pixels of mean distance
    double sample_spacing = 0.05;     // meters between court samples
    int max_consecutive_rejections = 10;
    int max_stages = 6;
    bool symmetric_start = true;      // begin with a two-sided chamfer stage
};

struct RefineResult {
    Camera camera;
    double initial_cost = 0;  // mean distance-transform value at the in-frame samples, pixels
    double final_cost = 0;
    int iterations = 0;       // accepted LM steps over all stages
    int active_samples = 0;
    bool converged = false;
    std::vector<double> history;  // mean distance after each stage, starting with the initial cost
    // LM objective after every accepted step, one list per stage. Stages differ in objective and
    // sample set, so only the lists themselves are comparable.
    std::vector<std::vector<double>> stage_history;
};

namespace detail {

inline std::vector<Vec3> in_frame_samples(const Camera& cam, const std::vector<Vec3>& samples, int w, int h) {
    std::vector<Vec3> out;
    for (const auto& p : samples) {
        auto px = try_project(cam, p);
        if (px && px->x() >= 0 && px->y() >= 0 && px->x() <= w - 1 && px->y() <= h - 1) out.push_back(p);
    }
    return out;
}

/// Pixel position of `x` and its derivative w.r.t. (rotation increment, T, f).
inline Vec2 project_with_jacobian(const Camera& cam, const Vec3& x, Eigen::Matrix<double, 2, 7>* J) {
    const Vec3 rx = cam.R * x;
    const Vec3 xc = rx + cam.T;
    const double z = std::max(xc.z(), 1e-6);
    const Vec2 n(xc.x() / z, xc.y() / z);
    if (J) {
        Eigen::Matrix<double, 2, 3> dp;
        dp << cam.f / z, 0, -cam.f * n.x() / z, 0, cam.f / z, -cam.f * n.y() / z;
        J->block<2, 3>(0, 0) = dp * (-skew(rx));
        J->block<2, 3>(0, 3) = dp;
        J->col(6) = n;
    }
    return cam.f * n + Vec2(cam.px, cam.py);
}

inline Camera retract_camera(const Camera& cam, const Eigen::VectorXd& d) {
    Camera out = cam;
    out.R = exp_so3(d.head<3>()) * cam.R;
    out.T = cam.T + d.segment<3>(3);
    out.f = cam.f + d(6);
    return out;
}

inline bool all_in_front(const Camera& cam, const std::vector<Vec3>& pts) {
    if (!(cam.f > 0)) return false;
    for (const auto& p : pts)
        if (cam.to_camera(p).z() <= 1e-6) return false;
    return true;
}

inline double mean_distance(const Camera& cam, const DistanceField& field, const std::vector<Vec3>& pts) {
    if (!all_in_front(cam, pts)) return std::numeric_limits<double>::infinity();
    double s = 0;
    for (const auto& p : pts) s += field.sample(project_with_jacobian(cam, p, nullptr));
    return s / double(pts.size());
}

// Residuals are sqrt(d + eps) so that the squared norm is the summed distance itself.
inline constexpr double kSqrtShift = 1e-4;

/// Nearest projected sample for each query pixel, bucketed on a coarse grid.
class NearestProjection {
public:
    NearestProjection(const std::vector<Vec2>& pts, int w, int h) : pts_(pts) {
        gw_ = static_cast<int>(w / kCell) + 1;
        gh_ = static_cast<int>(h / kCell) + 1;
        grid_.assign(size_t(gw_) * gh_, {});
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) grid_[cell(pts[i])].push_back(i);
    }

    int nearest(const Vec2& q) const {
        const int cx = std::clamp(static_cast<int>(q.x() / kCell), 0, gw_ - 1);
        const int cy = std::clamp(static_cast<int>(q.y() / kCell), 0, gh_ - 1);
        double best = std::numeric_limits<double>::infinity();
        int bi = -1;
        for (int rad = 0; rad < std::max(gw_, gh_) + 1; ++rad) {
            if (bi >= 0 && (rad - 1) * kCell > std::sqrt(best)) break;
            for (int y = cy - rad; y <= cy + rad; ++y)
                for (int x = cx - rad; x <= cx + rad; ++x) {
                    if (std::max(std::abs(y - cy), std::abs(x - cx)) != rad) continue;
                    if (x < 0 || y < 0 || x >= gw_ || y >= gh_) continue;
                    for (int i : grid_[size_t(y) * gw_ + x]) {
                        const double d = (pts_[i] - q).squaredNorm();
                        if (d < best || (d == best && i < bi)) best = d, bi = i;
                    }
                }
        }
        return bi;
    }

private:
    static constexpr double kCell = 16.0;
    size_t cell(const Vec2& p) const {
        const int x = std::clamp(static_cast<int>(std::floor(p.x() / kCell)), 0, gw_ - 1);
        const int y = std::clamp(static_cast<int>(std::floor(p.y() / kCell)), 0, gh_ - 1);
        return size_t(y) * gw_ + x;
    }
    const std::vector<Vec2>& pts_;
    int gw_, gh_;
    std::vector<std::vector<int>> grid_;
};

/// One LM run over a fixed sample set. With `mask_pixels` non-empty the objective also pulls every
/// mask pixel towards its nearest projected sample (two-sided chamfer).
inline LmReport refine_stage(Camera& cam, const DistanceField& field, const std::vector<Vec3>& active,
                             const std::vector<Vec2>& mask_pixels, const RefineOptions& opt) {
    const auto n = static_cast<Eigen::Index>(active.size());
    const auto m = static_cast<Eigen::Index>(mask_pixels.size());
    const double wf = 1.0 / double(n), wr = m > 0 ? 1.0 / double(m) : 0.0;
    auto residual = [&](const Camera& c, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(n + m);
        if (J) J->setZero(n + m, 7);
        std::vector<Vec2> proj(n);
        std::vector<Eigen::Matrix<double, 2, 7>> dproj(J ? n : 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            proj[i] = project_with_jacobian(c, active[i], J ? &dproj[i] : nullptr);
            Vec2 g;
            r(i) = std::sqrt(wf * (field.sample(proj[i], J ? &g : nullptr) + kSqrtShift));
            if (J) J->row(i) = wf * g.transpose() * dproj[i] / (2 * r(i));
        }
        if (m == 0) return;
        const NearestProjection index(proj, field.width(), field.height());
        for (Eigen::Index j = 0; j < m; ++j) {
            const int k = index.nearest(mask_pixels[j]);
            const Vec2 diff = proj[k] - mask_pixels[j];
            const double d = diff.norm();
            r(n + j) = std::sqrt(wr * (d + kSqrtShift));
            if (J && d > 1e-12) J->row(n + j) = wr * (diff / d).transpose() * dproj[k] / (2 * r(n + j));
        }
    };
    auto cost = [&](const Camera& c, const Eigen::VectorXd& r) {
        if (!all_in_front(c, active)) return std::numeric_limits<double>::infinity();
        return r.squaredNorm();
    };
    LmOptions lo;
    lo.max_iterations = opt.max_iterations;
    lo.min_improvement = opt.min_improvement;
    lo.max_consecutive_rejections = opt.max_consecutive_rejections;
    return levenberg_marquardt(cam, residual, retract_camera, cost, lo);
}

}  // namespace detail

/// Line-based camera refinement: moves rotation (axis-angle increments), translation and focal
/// length so that projected court samples land on the mask's line pixels. The objective is the
/// mean distance-transform value at the court samples that project into the frame.
///
/// Runs in stages. The sample set is re-selected from the current camera between stages and held
/// fixed inside each one. Early stages add the reverse term (mask pixels to nearest projected
/// sample), which keeps large initial errors from collapsing onto the wrong lines.
inline RefineResult refine_camera_lines(const Camera& init, const LineMask& mask, const CourtModel& court,
                                        const RefineOptions& opt = {}) {
    init.validate();
    require(mask.width > 0 && mask.height > 0, "empty line mask");
    require(opt.max_stages >= 1, "refinement needs at least one stage");
    if (mask.count_nonzero() == 0) throw ValidationError("line mask has no line pixels; refinement has no signal");
    const DistanceField field(mask);
    const auto samples = court.sample(opt.sample_spacing);

    auto active = detail::in_frame_samples(init, samples, mask.width, mask.height);
    if (active.size() < 8) throw ValidationError("too few court samples project into the frame");
    RefineResult out;
    out.initial_cost = detail::mean_distance(init, field, active);
    if (!std::isfinite(out.initial_cost)) throw NumericalError("camera refinement cost is not finite at the initial camera");
    out.history.push_back(out.initial_cost);

    std::vector<Vec2> mask_pixels;
    if (opt.symmetric_start) {
        int k = 0;
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                if (mask.at(x, y) && k++ % 4 == 0) mask_pixels.emplace_back(x, y);
    }

    Camera cam = init;
    const std::vector<Vec2> none;
    bool symmetric = opt.symmetric_start;
    for (int stage = 0; stage < opt.max_stages; ++stage) {
        const auto rep = detail::refine_stage(cam, field, active, symmetric ? mask_pixels : none, opt);
        out.iterations += rep.iterations;
        out.stage_history.push_back(rep.history);
        auto next = detail::in_frame_samples(cam, samples, mask.width, mask.height);
        if (next.size() < 8) break;
        const bool same_set = next == active;
        active = std::move(next);
        out.history.push_back(detail::mean_distance(cam, field, active));
        if (symmetric) {
            if (same_set) symmetric = false;
            continue;
        }
        if (same_set && rep.initial_cost - rep.final_cost < opt.min_improvement) {
            out.converged = true;
            break;
        }
    }
    cam.R = nearest_rotation(cam.R);
    out.final_cost = detail::mean_distance(cam, field, active);
    out.active_samples = static_cast<int>(active.size());
    if (!(out.final_cost <= out.initial_cost)) {
        // the staged search ended somewhere worse than it started
        cam = init;
        out.final_cost = out.initial_cost;
        out.converged = false;
    }
    out.camera = cam;
    return out;
}

/// Mean pixel distance between two cameras' projections of the court keypoints that the reference
/// camera sees in frame.
inline double keypoint_reprojection_error(const Camera& estimate, const Camera& reference, const CourtModel& court,
                                          int width, int height) {
    double sum = 0;
    int count = 0;
    for (const auto& k : court.keypoints) {
        auto ref = try_project(reference, k);
        if (!ref || ref->x() < 0 || ref->y() < 0 || ref->x() >= width || ref->y() >= height) continue;
        auto est = try_project(estimate, k);
        if (!est) return std::numeric_limits<double>::infinity();
        sum += (*est - *ref).norm();
        ++count;
    }
    require(count > 0, "no court keypoints in frame");
    return sum / count;
}

}  // namespace hoop::court
