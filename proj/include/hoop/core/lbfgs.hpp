#pragma once

#include <Eigen/Core>

#include <cmath>
#include <deque>
#include <vector>

#include "hoop/core/error.hpp"

namespace hoop {

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 20;
    double armijo = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 40;
    double gradient_tolerance = 1e-12;
};

struct LbfgsReport {
    std::vector<double> history;  // objective after every accepted step, starting with the initial value
    int iterations = 0;
    bool converged = false;  // gradient fell below tolerance
    bool stalled = false;    // line search found no decrease
};

/// Limited-memory BFGS with Armijo backtracking. `f(x, g)` returns the objective and fills the
/// gradient when `g` is non-null. Accepted steps strictly decrease the objective.
template <class Fn>
LbfgsReport lbfgs(Eigen::VectorXd& x, Fn&& f, const LbfgsOptions& opt = {}) {
    require(opt.memory >= 1 && opt.max_iterations >= 0, "bad L-BFGS options");
    LbfgsReport rep;
    Eigen::VectorXd g(x.size());
    double fx = f(x, &g);
    if (!std::isfinite(fx) || !g.allFinite()) throw NumericalError("non-finite objective at the L-BFGS start");
    rep.history.push_back(fx);
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y), newest last
    Eigen::VectorXd gn(x.size());
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
            rep.converged = true;
            break;
        }
        // two-loop recursion
        Eigen::VectorXd d = -g;
        std::vector<double> alpha(pairs.size());
        for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
            const auto& [s, y] = pairs[i];
            alpha[i] = s.dot(d) / y.dot(s);
            d -= alpha[i] * y;
        }
        if (pairs.empty())
            d /= std::max(1.0, g.norm());
        else
            d *= pairs.back().first.dot(pairs.back().second) / pairs.back().second.squaredNorm();
        for (size_t i = 0; i < pairs.size(); ++i) {
            const auto& [s, y] = pairs[i];
            d += s * (alpha[i] - y.dot(d) / y.dot(s));
        }
        double slope = g.dot(d);
        if (!(slope < 0)) {
            pairs.clear();
            d = -g / std::max(1.0, g.norm());
            slope = g.dot(d);
        }
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd xn;
        double fn = 0;
        for (int b = 0; b < opt.max_backtracks; ++b, step *= opt.shrink) {
            xn = x + step * d;
            fn = f(xn, &gn);
            if (std::isfinite(fn) && fn < fx && fn <= fx + opt.armijo * step * slope && gn.allFinite()) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            rep.stalled = true;
            break;
        }
        Eigen::VectorXd s = xn - x, y = gn - g;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            pairs.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(pairs.size()) > opt.memory) pairs.pop_front();
        }
        x = std::move(xn);
        g = gn;
        fx = fn;
        rep.history.push_back(fx);
        ++rep.iterations;
    }
    return rep;
}

}  // namespace hoop
