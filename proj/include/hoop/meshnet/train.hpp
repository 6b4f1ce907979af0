#pragma once

#include <algorithm>
#include <numeric>
#include <sstream>

#include "hoop/meshnet/tlnet.hpp"

namespace hoop::meshnet {

struct TrainExample {
    Pose3D pose;
    PartMesh rest;
    PartMesh posed;
};

struct TrainConfig {
    double lr = 1e-3;
    double decay = 0.99;  // learning-rate factor applied after every epoch
    double weight_decay = 5e-5;
    double momentum = 0.9;
    int batch = 16;
    int epochs = 1;
    uint64_t seed = 0;
    double wz = kDefaultWz;
    double wmesh = kDefaultWmesh;
    bool dropout = true;

    void validate() const {
        require(lr >= 0 && decay > 0 && weight_decay >= 0, "bad learning-rate schedule");
        require(momentum >= 0 && momentum < 1, "momentum must be in [0, 1)");
        require(batch >= 1 && epochs >= 0, "batch size and epoch count must be positive");
        require(wz >= 0 && wmesh >= 0, "loss weights must be nonnegative");
    }
};

struct TlLossTerms {
    double z = 0;          // mean |Z_pred - Z_gt|
    double mesh_pred = 0;  // mean |decode(Z_pred) - V|
    double mesh_gt = 0;    // mean |decode(Z_gt) - V|
    double total = 0;
};

/// Training loss of one example: wZ * z + wmesh * (mesh_pred + mesh_gt). Gradients accumulate into
/// `grads` scaled by `scale`.
inline TlLossTerms tl_loss(const TrainExample& ex, const NetParams& params, const TlNet& net, double wz, double wmesh,
                           NetParams* grads = nullptr, double scale = 1.0, std::mt19937_64* rng = nullptr) {
    NetParams local;
    if (grads) local = params.zeros_like();
    Graph g(params, grads ? &local : nullptr);
    const auto n = record_tl(g, ex.pose, ex.rest, net, &ex.posed, rng);
    const Eigen::MatrixXd gt = ex.posed.vertices;
    TlLossTerms t;
    t.z = mean_l1(g.value(n.z_pred), g.value(n.z_gt));
    t.mesh_pred = mean_l1(g.value(n.v_pred), gt);
    t.mesh_gt = mean_l1(g.value(n.v_gt_path), gt);
    t.total = wz * t.z + wmesh * (t.mesh_pred + t.mesh_gt);
    if (grads) {
        const Eigen::MatrixXd dz = wz * mean_l1_grad(g.value(n.z_pred), g.value(n.z_gt));
        g.backward({{n.z_pred, dz},
                    {n.z_gt, -dz},
                    {n.v_pred, wmesh * mean_l1_grad(g.value(n.v_pred), gt)},
                    {n.v_gt_path, wmesh * mean_l1_grad(g.value(n.v_gt_path), gt)}});
        grads->add_scaled(local, scale);
    }
    return t;
}

/// Heavy-ball gradient descent with L2 weight decay.
class MomentumSgd {
public:
    MomentumSgd(double lr, double momentum, double weight_decay) : lr_(lr), mu_(momentum), wd_(weight_decay) {}

    void step(NetParams& p, const NetParams& grad) {
        if (velocity_.tensors.empty()) velocity_ = p.zeros_like();
        for (auto& [name, v] : velocity_.tensors) {
            auto& theta = p[name];
            v = mu_ * v - lr_ * (grad[name] + wd_ * theta);
            theta += v;
        }
    }
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    double lr_, mu_, wd_;
    NetParams velocity_;
};

struct TrainReport {
    NetParams params;
    std::vector<double> step_loss;       // batch-mean total loss before each update
    std::vector<double> step_mesh_loss;  // batch-mean mesh_pred term before each update
    std::vector<double> epoch_loss;
    int steps = 0;
};

/// Mini-batch training of the TL network. Batches are drawn from a seeded shuffle; gradients
/// are summed in example order, so results are reproducible.
inline TrainReport train_toy(const std::vector<TrainExample>& data, const NetParams& init, const TlNet& net,
                             const TrainConfig& cfg) {
    cfg.validate();
    require(!data.empty(), "training set is empty");
    TrainReport rep;
    rep.params = init;
    MomentumSgd opt(cfg.lr, cfg.momentum, cfg.weight_decay);
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    NetParams grad = init.zeros_like();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch) {
            const size_t end = std::min(order.size(), start + size_t(cfg.batch));
            const double scale = 1.0 / double(end - start);
            grad.set_zero();
            TlLossTerms mean;
            for (size_t i = start; i < end; ++i) {
                const auto t = tl_loss(data[order[i]], rep.params, net, cfg.wz, cfg.wmesh, &grad, scale,
                                       cfg.dropout ? &rng : nullptr);
                if (!std::isfinite(t.total)) {
                    std::ostringstream msg;
                    msg << "non-finite training loss at epoch " << epoch << ", step " << rep.steps << ", example "
                        << order[i] << " (z " << t.z << ", mesh " << t.mesh_pred << ", gt path " << t.mesh_gt << ")";
                    throw NumericalError(msg.str());
                }
                mean.total += scale * t.total;
                mean.mesh_pred += scale * t.mesh_pred;
            }
            if (!grad.all_finite())
                throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(rep.steps));
            opt.step(rep.params, grad);
            rep.step_loss.push_back(mean.total);
            rep.step_mesh_loss.push_back(mean.mesh_pred);
            epoch_sum += mean.total * double(end - start);
            ++rep.steps;
        }
        rep.epoch_loss.push_back(epoch_sum / double(data.size()));
        opt.set_lr(opt.lr() * cfg.decay);
    }
    return rep;
}

}  // namespace hoop::meshnet
