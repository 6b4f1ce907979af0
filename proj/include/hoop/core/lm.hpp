#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "hoop/core/error.hpp"

namespace hoop {

struct LmOptions {
    int max_iterations = 100;
    double min_improvement = 1e-8;  // absolute cost decrease that counts as progress
    double gradient_tolerance = 1e-14;
    double initial_lambda = 1e-3;
    int max_consecutive_rejections = 10;
};

struct LmReport {
    double initial_cost = 0;
    double final_cost = 0;
    int iterations = 0;
    bool converged = false;  // improvement or gradient fell below tolerance
    bool stalled = false;    // damping could not find a descent step
    std::vector<double> history;  // cost after every accepted step, starting with the initial cost
};

/// Damped Gauss-Newton on residuals r(x) over a manifold-valued state.
///   residual(state, r, J*)   fills r and, when J* is non-null, the Jacobian w.r.t. a local increment
///   retract(state, delta)    returns the state moved by `delta`
///   cost(state, r)           scalar that decides acceptance (steps must strictly decrease it)
/// The state is only ever replaced by candidates with lower cost.
template <class State, class ResidualFn, class RetractFn, class CostFn>
LmReport levenberg_marquardt(State& state, ResidualFn&& residual, RetractFn&& retract, CostFn&& cost,
                             const LmOptions& opt = {}) {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    residual(state, r, &J);
    double c = cost(state, r);
    if (!std::isfinite(c)) throw NumericalError("non-finite initial cost");
    LmReport rep;
    rep.initial_cost = c;
    rep.history.push_back(c);
    double lambda = opt.initial_lambda;
    int rejections = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Eigen::MatrixXd H = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
            rep.converged = true;
            break;
        }
        bool accepted = false;
        double improvement = 0;
        while (!accepted) {
            Eigen::MatrixXd A = H;
            for (Eigen::Index i = 0; i < A.rows(); ++i) A(i, i) += lambda * std::max(H(i, i), 1e-12);
            const Eigen::VectorXd delta = -A.ldlt().solve(g);
            State cand = retract(state, delta);
            Eigen::VectorXd rc;
            residual(cand, rc, nullptr);
            const double cc = cost(cand, rc);
            if (std::isfinite(cc) && cc < c) {
                improvement = c - cc;
                state = std::move(cand);
                c = cc;
                lambda = std::max(lambda / 3.0, 1e-12);
                rejections = 0;
                accepted = true;
            } else {
                lambda *= 4.0;
                if (++rejections >= opt.max_consecutive_rejections) break;
            }
        }
        if (!accepted) {
            rep.stalled = true;
            break;
        }
        ++rep.iterations;
        rep.history.push_back(c);
        if (improvement < opt.min_improvement) {
            rep.converged = true;
            break;
        }
        residual(state, r, &J);
    }
    rep.final_cost = c;
    return rep;
}

/// Half squared residual norm, the default acceptance cost.
struct HalfSquaredNorm {
    template <class State>
    double operator()(const State&, const Eigen::VectorXd& r) const {
        return 0.5 * r.squaredNorm();
    }
};

}  // namespace hoop
