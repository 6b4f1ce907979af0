#pragma once

#include <map>
#include <optional>

#include "hoop/meshnet/graph.hpp"
#include "hoop/meshnet/sampling.hpp"

namespace hoop::meshnet {

inline constexpr int kLatentSize = 32;

/// Per-part down-sampling factors of the four encoder levels.
inline std::vector<double> default_ds_factors(Part p) {
    switch (p) {
        case Part::head: return {2, 2, 1, 1};
        case Part::arms: return {2, 2, 2, 1};
        case Part::shoes: return {2, 2, 2, 1};
        case Part::shirt: return {4, 2, 2, 2};
        case Part::pants: return {2, 2, 2, 2};
        case Part::legs: return {2, 2, 1, 1};
    }
    return {2, 2, 1, 1};
}

struct NetConfig {
    int pose_joints = kNumJoints;
    int pose_hidden = 64;
    int res_blocks = 2;
    int res_layers = 4;  // FC-ReLU-Dropout layers inside one residual block
    double dropout = 0.5;
    std::vector<int> enc_channels{16, 32, 64, 64};
    std::vector<int> dec_channels{64, 32, 16, 16, 3};
    std::vector<double> ds_factors{2, 2, 1, 1};
    std::vector<int> enc_dilation{2, 2, 1, 1};
    std::vector<int> dec_dilation{1, 1, 2, 2, 2};
    int spiral_length = kDefaultSpiralLength;
    int latent = kLatentSize;
    int step_size = 0;  // hops between kept spiral entries in every SC layer; 0 uses the dilations above

    static NetConfig for_part(Part p) {
        NetConfig c;
        c.ds_factors = default_ds_factors(p);
        return c;
    }

    int levels() const { return static_cast<int>(enc_channels.size()); }
    int enc_step(int i) const { return step_size > 0 ? step_size : enc_dilation[i]; }
    int dec_step(int k) const { return step_size > 0 ? step_size : dec_dilation[k]; }

    void validate() const {
        require(pose_joints > 0 && pose_hidden > 0 && latent > 0, "network sizes must be positive");
        require(res_blocks >= 0 && res_layers >= 1, "bad residual block layout");
        require(dropout >= 0 && dropout < 1, "dropout rate must be in [0, 1)");
        require(levels() >= 1, "mesh encoder needs at least one level");
        require(static_cast<int>(ds_factors.size()) == levels() && static_cast<int>(enc_dilation.size()) == levels(),
                "down-sampling factors and encoder dilations need one entry per encoder level");
        require(static_cast<int>(dec_channels.size()) == levels() + 1 &&
                    static_cast<int>(dec_dilation.size()) == levels() + 1,
                "decoder channels and dilations need one entry per level plus the output layer");
        require(dec_channels.back() == 3, "the decoder must end in 3 channels");
        require(spiral_length >= 1, "spiral length must be positive");
        require(step_size >= 0, "spiral step size must be nonnegative");
        for (int d : enc_dilation) require(d >= 1, "dilations must be positive");
        for (int d : dec_dilation) require(d >= 1, "dilations must be positive");
    }
};

/// Template mesh pyramid with its sampling operators and the spirals each layer uses.
struct MeshHierarchy {
    std::vector<PartMesh> levels;          // 0 = template
    std::vector<SamplingOperator> ops;     // ops[i]: level i -> level i+1
    std::map<std::pair<int, int>, SpiralIndices> spirals;  // (level, dilation)

    const SpiralIndices& spiral(int level, int dilation) const { return spirals.at({level, dilation}); }
    int vertices(int level) const { return levels[level].num_vertices(); }
};

inline MeshHierarchy build_hierarchy(const PartMesh& tmpl, const NetConfig& cfg) {
    cfg.validate();
    MeshHierarchy h;
    h.levels.push_back(tmpl);
    for (int i = 0; i < cfg.levels(); ++i) {
        h.ops.push_back(build_sampling(h.levels.back(), cfg.ds_factors[i]));
        h.levels.push_back(h.ops.back().coarse);
    }
    auto need = [&](int level, int d) {
        if (!h.spirals.count({level, d})) h.spirals[{level, d}] = build_spirals(h.levels[level], cfg.spiral_length, d);
    };
    for (int i = 0; i < cfg.levels(); ++i) need(i, cfg.enc_step(i));
    for (int k = 0; k < cfg.levels(); ++k) need(cfg.levels() - 1 - k, cfg.dec_step(k));
    need(0, cfg.dec_step(cfg.levels()));
    return h;
}

struct TlNet {
    NetConfig cfg;
    MeshHierarchy mesh;

    static TlNet build(const PartMesh& tmpl, const NetConfig& cfg) { return {cfg, build_hierarchy(tmpl, cfg)}; }
};

namespace detail {
inline void add_encoder_params(NetParams& p, const std::string& pre, const TlNet& net, std::mt19937_64& rng) {
    const auto& c = net.cfg;
    int cin = 3;
    for (int i = 0; i < c.levels(); ++i) {
        add_layer(p, pre + ".sc" + std::to_string(i), Eigen::Index(c.spiral_length) * cin, c.enc_channels[i], rng);
        cin = c.enc_channels[i];
    }
    add_layer(p, pre + ".fc", Eigen::Index(net.mesh.vertices(c.levels())) * cin, c.latent, rng);
}
}  // namespace detail

inline NetParams init_tl_params(const TlNet& net, uint64_t seed) {
    const auto& c = net.cfg;
    std::mt19937_64 rng(seed);
    NetParams p;
    add_layer(p, "pose.in", 3 * c.pose_joints, c.pose_hidden, rng);
    for (int b = 0; b < c.res_blocks; ++b)
        for (int l = 0; l < c.res_layers; ++l)
            add_layer(p, "pose.res" + std::to_string(b) + ".fc" + std::to_string(l), c.pose_hidden, c.pose_hidden, rng);
    add_layer(p, "pose.out", c.pose_hidden, c.latent, rng);
    detail::add_encoder_params(p, "enc_rest", net, rng);
    detail::add_encoder_params(p, "enc_gt", net, rng);
    add_layer(p, "fuse", 2 * c.latent, c.latent, rng);
    const int top = c.enc_channels.back();
    add_layer(p, "dec.fc", c.latent, Eigen::Index(net.mesh.vertices(c.levels())) * top, rng);
    int cin = top;
    for (int k = 0; k < c.levels(); ++k) {
        add_layer(p, "dec.sc" + std::to_string(k), Eigen::Index(c.spiral_length) * cin, c.dec_channels[k], rng);
        cin = c.dec_channels[k];
    }
    add_layer(p, "dec.out", Eigen::Index(c.spiral_length) * cin, c.dec_channels.back(), rng);
    return p;
}

/// Graph builders for the individual sub-networks; each returns the output node.
namespace detail {

inline int pose_encoder(Graph& g, int x, const NetConfig& c, std::mt19937_64* rng) {
    int r = g.relu(g.linear(x, "pose.in"));
    for (int b = 0; b < c.res_blocks; ++b) {
        int y = r;
        for (int l = 0; l < c.res_layers; ++l)
            y = g.dropout(g.relu(g.linear(y, "pose.res" + std::to_string(b) + ".fc" + std::to_string(l))), c.dropout, rng);
        r = g.add(r, y);
    }
    return g.linear(r, "pose.out");
}

inline int mesh_encoder(Graph& g, int x, const std::string& pre, const TlNet& net) {
    const auto& c = net.cfg;
    for (int i = 0; i < c.levels(); ++i) {
        x = g.elu(g.spiral(x, net.mesh.spiral(i, c.enc_step(i)), pre + ".sc" + std::to_string(i)));
        x = g.sparse_mul(net.mesh.ops[i].D, x);
    }
    return g.linear(g.reshape(x, 1, g.value(x).size()), pre + ".fc");
}

inline int mesh_decoder(Graph& g, int z, const TlNet& net) {
    const auto& c = net.cfg;
    const int top = c.levels();
    int y = g.reshape(g.linear(z, "dec.fc"), net.mesh.vertices(top), c.enc_channels.back());
    for (int k = 0; k < c.levels(); ++k) {
        const int level = top - 1 - k;
        y = g.sparse_mul(net.mesh.ops[level].U, y);
        y = g.elu(g.spiral(y, net.mesh.spiral(level, c.dec_step(k)), "dec.sc" + std::to_string(k)));
    }
    return g.spiral(y, net.mesh.spiral(0, c.dec_step(c.levels())), "dec.out");
}

}  // namespace detail

inline Eigen::MatrixXd pose_input(const Pose3D& pose, const NetConfig& c) {
    require(pose.size() == c.pose_joints, "pose has " + std::to_string(pose.size()) + " joints, network expects " +
                                              std::to_string(c.pose_joints));
    require(pose.positions.allFinite(), "pose has non-finite coordinates");
    return reshape_rows(Eigen::MatrixXd(pose.positions), 1, 3 * c.pose_joints);
}

inline void check_part(const PartMesh& m, const TlNet& net) {
    require(m.num_vertices() == net.mesh.vertices(0), "part has " + std::to_string(m.num_vertices()) +
                                                          " vertices, network template has " +
                                                          std::to_string(net.mesh.vertices(0)));
}

/// Node ids of one recorded TL pass.
struct TlNodes {
    int z_pose = -1, z_rest = -1, z_pred = -1, v_pred = -1;
    int z_gt = -1, v_gt_path = -1;  // only when a posed ground truth was given
};

/// Records the TL pass. With `posed` the ground-truth encoder and the Z_gt decoder path are added.
/// Dropout is active only when `rng` is non-null.
inline TlNodes record_tl(Graph& g, const Pose3D& pose, const PartMesh& rest, const TlNet& net,
                         const PartMesh* posed = nullptr, std::mt19937_64* rng = nullptr) {
    check_part(rest, net);
    TlNodes n;
    n.z_pose = detail::pose_encoder(g, g.input(pose_input(pose, net.cfg)), net.cfg, rng);
    n.z_rest = detail::mesh_encoder(g, g.input(Eigen::MatrixXd(rest.vertices)), "enc_rest", net);
    n.z_pred = g.linear(g.concat_cols(n.z_pose, n.z_rest), "fuse");
    n.v_pred = detail::mesh_decoder(g, n.z_pred, net);
    if (posed) {
        check_part(*posed, net);
        n.z_gt = detail::mesh_encoder(g, g.input(Eigen::MatrixXd(posed->vertices)), "enc_gt", net);
        n.v_gt_path = detail::mesh_decoder(g, n.z_gt, net);
    }
    return n;
}

struct TlOutput {
    Eigen::RowVectorXd z_pred;
    Points3 v_pred;
};

/// Test-time path: pose and rest part to Z_pred, decoded to posed vertices.
inline TlOutput tl_forward(const Pose3D& pose, const PartMesh& rest, const NetParams& params, const TlNet& net) {
    Graph g(params);
    const auto n = record_tl(g, pose, rest, net);
    return {g.value(n.z_pred).row(0), Points3(g.value(n.v_pred))};
}

/// Decoder alone, for feeding any latent code (e.g. Z_gt).
inline Points3 decode_latent(const Eigen::RowVectorXd& z, const NetParams& params, const TlNet& net) {
    require(z.size() == net.cfg.latent, "latent code has the wrong size");
    require(z.allFinite(), "latent code is not finite");
    Graph g(params);
    return Points3(g.value(detail::mesh_decoder(g, g.input(Eigen::MatrixXd(z)), net)));
}

/// Ground-truth mesh encoder alone.
inline Eigen::RowVectorXd encode_posed(const PartMesh& posed, const NetParams& params, const TlNet& net) {
    check_part(posed, net);
    Graph g(params);
    return g.value(detail::mesh_encoder(g, g.input(Eigen::MatrixXd(posed.vertices)), "enc_gt", net)).row(0);
}

// ---- losses -----------------------------------------------------------------

inline constexpr double kDefaultWz = 5.0;
inline constexpr double kDefaultWmesh = 50.0;

inline double mean_l1(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "L1 operands have different shapes");
    require(a.size() > 0, "L1 of empty operands");
    return (a - b).cwiseAbs().sum() / double(a.size());
}

/// d mean|a - b| / d a (zero where equal)
inline Eigen::MatrixXd mean_l1_grad(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).unaryExpr([](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); }) / double(a.size());
}

/// wZ * mean|Z_pred - Z_gt| + wmesh * mean|V_pred - V_posed|
inline double skin_loss(const Eigen::MatrixXd& z_pred, const Eigen::MatrixXd& z_gt, const Eigen::MatrixXd& v_pred,
                        const Eigen::MatrixXd& v_posed, double wz = kDefaultWz, double wmesh = kDefaultWmesh) {
    return wz * mean_l1(z_pred, z_gt) + wmesh * mean_l1(v_pred, v_posed);
}

}  // namespace hoop::meshnet
