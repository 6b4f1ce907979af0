#pragma once

#include "hoop/meshnet/graph.hpp"
#include "hoop/meshnet/tlnet.hpp"

namespace hoop::meshnet {

struct IdentityConfig {
    int feature_dim = 16;
    int hidden = 32;
};

inline NetParams init_identity_params(const IdentityConfig& cfg, uint64_t seed) {
    require(cfg.feature_dim >= 0 && cfg.hidden > 0, "bad identity network sizes");
    std::mt19937_64 rng(seed);
    NetParams p;
    add_layer(p, "id.fc1", 3 + cfg.feature_dim, cfg.hidden, rng);
    add_layer(p, "id.fc2", cfg.hidden, 3, rng);
    return p;
}

namespace detail {
/// Per-vertex offsets from [vertex, feature] rows; returns the offset node.
inline int record_identity(Graph& g, const Points3& verts, const Eigen::VectorXd& feature, const NetParams& params) {
    const auto in = params["id.fc1.W"].rows();
    require(in == 3 + feature.size(), "identity feature has " + std::to_string(feature.size()) +
                                          " entries, network expects " + std::to_string(in - 3));
    require(feature.allFinite(), "identity feature is not finite");
    Eigen::MatrixXd x(verts.rows(), in);
    x.leftCols(3) = verts;
    x.rightCols(feature.size()) = feature.transpose().replicate(verts.rows(), 1);
    return g.linear(g.elu(g.linear(g.input(std::move(x)), "id.fc1")), "id.fc2");
}
}  // namespace detail

/// Template plus predicted per-vertex offsets.
inline BodyMesh identity_offsets(const BodyMesh& tmpl, const Eigen::VectorXd& feature, const NetParams& params) {
    const PartMesh m = tmpl.merged();
    Graph g(params);
    const int off = detail::record_identity(g, m.vertices, feature, params);
    BodyMesh out = tmpl;
    out.scatter(m.vertices + Points3(g.value(off)));
    return out;
}

struct IdentityLoss {
    double loss = 0;
    NetParams grads;
};

/// Mean L1 between the offset template and `target`, with parameter gradients.
inline IdentityLoss identity_loss(const BodyMesh& tmpl, const Eigen::VectorXd& feature, const NetParams& params,
                                  const BodyMesh& target) {
    require(target.total_vertices() == tmpl.total_vertices(), "identity target vertex count mismatch");
    const PartMesh m = tmpl.merged();
    const Eigen::MatrixXd gt = target.merged().vertices;
    IdentityLoss out{0, params.zeros_like()};
    Graph g(params, &out.grads);
    const int off = detail::record_identity(g, m.vertices, feature, params);
    const Eigen::MatrixXd pred = Eigen::MatrixXd(m.vertices) + g.value(off);
    out.loss = mean_l1(pred, gt);
    g.backward({{off, mean_l1_grad(pred, gt)}});
    return out;
}

}  // namespace hoop::meshnet
