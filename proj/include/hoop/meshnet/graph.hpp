#pragma once

#include <functional>
#include <random>
#include <vector>

#include "hoop/core/mesh.hpp"
#include "hoop/meshnet/params.hpp"
#include "hoop/meshnet/spiral.hpp"

namespace hoop::meshnet {

/// Row-major reinterpretation of a matrix as rows x cols.
inline Eigen::MatrixXd reshape_rows(const Eigen::MatrixXd& x, Eigen::Index rows, Eigen::Index cols) {
    require(x.size() == rows * cols, "reshape size mismatch");
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMat rm = x;
    return Eigen::Map<const RowMat>(rm.data(), rows, cols);
}

/// Records a forward computation and replays it backwards. Node values are matrices; parameter
/// gradients accumulate into `grads` when it is non-null.
class Graph {
public:
    explicit Graph(const NetParams& params, NetParams* grads = nullptr) : p_(params), g_(grads) {}

    int input(Eigen::MatrixXd v) { return push(std::move(v)); }
    const Eigen::MatrixXd& value(int id) const { return vals_[id]; }
    const Eigen::MatrixXd& grad(int id) const { return grads_[id]; }

    int linear(int x, const std::string& name) {
        const auto& w = p_[name + ".W"];
        const auto& b = p_[name + ".b"];
        require(vals_[x].cols() == w.rows(), "layer '" + name + "' expects " + std::to_string(w.rows()) + " inputs, got " +
                                                 std::to_string(vals_[x].cols()));
        Eigen::MatrixXd y = vals_[x] * w;
        y.rowwise() += b.row(0);
        const int out = push(std::move(y));
        ops_.push_back([this, x, out, name] {
            const auto& dy = grads_[out];
            if (g_) {
                (*g_)[name + ".W"] += vals_[x].transpose() * dy;
                (*g_)[name + ".b"] += dy.colwise().sum();
            }
            acc(x, dy * p_[name + ".W"].transpose());
        });
        return out;
    }

    int relu(int x) {
        const int out = push(vals_[x].cwiseMax(0.0));
        ops_.push_back([this, x, out] { acc(x, (vals_[x].array() > 0).cast<double>().matrix().cwiseProduct(grads_[out])); });
        return out;
    }

    int elu(int x) {
        const Eigen::MatrixXd& v = vals_[x];
        const int out = push(v.unaryExpr([](double a) { return a > 0 ? a : std::expm1(a); }));
        ops_.push_back([this, x, out] {
            const Eigen::MatrixXd d = vals_[x].unaryExpr([](double a) { return a > 0 ? 1.0 : std::exp(a); });
            acc(x, d.cwiseProduct(grads_[out]));
        });
        return out;
    }

    /// Inverted dropout; identity when rng is null or rate is zero.
    int dropout(int x, double rate, std::mt19937_64* rng) {
        if (!rng || rate <= 0) return x;
        require(rate < 1, "dropout rate must be below 1");
        std::bernoulli_distribution keep(1 - rate);
        Eigen::MatrixXd mask(vals_[x].rows(), vals_[x].cols());
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? 1.0 / (1 - rate) : 0.0;
        const int out = push(vals_[x].cwiseProduct(mask));
        ops_.push_back([this, x, out, mask] { acc(x, grads_[out].cwiseProduct(mask)); });
        return out;
    }

    int add(int a, int b) {
        const int out = push(vals_[a] + vals_[b]);
        ops_.push_back([this, a, b, out] {
            acc(a, grads_[out]);
            acc(b, grads_[out]);
        });
        return out;
    }

    int concat_cols(int a, int b) {
        require(vals_[a].rows() == vals_[b].rows(), "concatenation row mismatch");
        Eigen::MatrixXd y(vals_[a].rows(), vals_[a].cols() + vals_[b].cols());
        y << vals_[a], vals_[b];
        const int out = push(std::move(y));
        ops_.push_back([this, a, b, out] {
            acc(a, grads_[out].leftCols(vals_[a].cols()));
            acc(b, grads_[out].rightCols(vals_[b].cols()));
        });
        return out;
    }

    int spiral(int x, const SpiralIndices& sp, const std::string& name) {
        const auto& w = p_[name + ".W"];
        const auto& b = p_[name + ".b"];
        const int out = push(spiral_conv(vals_[x], sp, w, b));
        ops_.push_back([this, x, out, &sp, name] {
            const auto g = spiral_conv_backward(vals_[x], sp, p_[name + ".W"], grads_[out]);
            if (g_) {
                (*g_)[name + ".W"] += g.dw;
                (*g_)[name + ".b"] += g.db;
            }
            acc(x, g.dx);
        });
        return out;
    }

    int sparse_mul(const SparseMatrix& m, int x) {
        require(m.cols() == vals_[x].rows(), "sampling operator does not match the feature rows");
        const int out = push(m * vals_[x]);
        ops_.push_back([this, &m, x, out] { acc(x, m.transpose() * grads_[out]); });
        return out;
    }

    int reshape(int x, Eigen::Index rows, Eigen::Index cols) {
        const auto r0 = vals_[x].rows(), c0 = vals_[x].cols();
        const int out = push(reshape_rows(vals_[x], rows, cols));
        ops_.push_back([this, x, out, r0, c0] { acc(x, reshape_rows(grads_[out], r0, c0)); });
        return out;
    }

    /// Seeds output gradients and runs every recorded op in reverse.
    void backward(const std::vector<std::pair<int, Eigen::MatrixXd>>& seeds) {
        grads_.resize(vals_.size());
        for (size_t i = 0; i < vals_.size(); ++i) grads_[i] = Eigen::MatrixXd::Zero(vals_[i].rows(), vals_[i].cols());
        for (const auto& [id, g] : seeds) {
            require(g.rows() == vals_[id].rows() && g.cols() == vals_[id].cols(), "gradient seed shape mismatch");
            grads_[id] += g;
        }
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    int push(Eigen::MatrixXd v) {
        vals_.push_back(std::move(v));
        return static_cast<int>(vals_.size()) - 1;
    }
    void acc(int id, const Eigen::MatrixXd& g) { grads_[id] += g; }

    const NetParams& p_;
    NetParams* g_;
    std::vector<Eigen::MatrixXd> vals_, grads_;
    std::vector<std::function<void()>> ops_;
};

}  // namespace hoop::meshnet
