#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include "hoop/core/mesh.hpp"

namespace hoop::meshnet {

inline constexpr int kPad = -1;
inline constexpr int kDefaultSpiralLength = 9;

/// Fixed-length neighbourhood sequence per vertex; kPad marks missing entries.
struct SpiralIndices {
    int length = kDefaultSpiralLength;
    int dilation = 1;
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> idx;  // N x length

    int num_vertices() const { return static_cast<int>(idx.rows()); }
};

namespace detail {

/// Tangent basis at a vertex: t1 is the reference axis (x, or y when x is nearly normal)
/// projected into the tangent plane, t2 = n x t1.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& n) {
    Vec3 r = Vec3::UnitX() - Vec3::UnitX().dot(n) * n;
    if (r.norm() < 1e-6) r = Vec3::UnitY() - Vec3::UnitY().dot(n) * n;
    const Vec3 t1 = r.normalized();
    return {t1, n.cross(t1)};
}

/// Orders a ring counterclockwise about n, starting from the member most aligned with t1.
inline void order_ring(std::vector<int>& ring, const PartMesh& mesh, int center, const Vec3& t1, const Vec3& t2) {
    if (ring.empty()) return;
    const Vec3 c = mesh.vertex(center);
    std::vector<std::tuple<double, double, int>> key;  // angle, distance, index
    for (int u : ring) {
        const Vec3 d = mesh.vertex(u) - c;
        key.emplace_back(std::atan2(d.dot(t2), d.dot(t1)), d.norm(), u);
    }
    const auto start = *std::min_element(key.begin(), key.end(), [](const auto& a, const auto& b) {
        return std::make_tuple(std::abs(std::get<0>(a)), std::get<0>(a) < 0, std::get<2>(a)) <
               std::make_tuple(std::abs(std::get<0>(b)), std::get<0>(b) < 0, std::get<2>(b));
    });
    const double a0 = std::get<0>(start);
    for (auto& k : key) {
        double a = std::get<0>(k) - a0;
        while (a < 0) a += 2 * std::numbers::pi;
        while (a >= 2 * std::numbers::pi) a -= 2 * std::numbers::pi;
        std::get<0>(k) = a;
    }
    // the start member sits at exactly zero
    for (auto& k : key)
        if (std::get<2>(k) == std::get<2>(start)) std::get<0>(k) = -1.0;
    std::sort(key.begin(), key.end());
    for (size_t i = 0; i < ring.size(); ++i) ring[i] = std::get<2>(key[i]);
}

}  // namespace detail

/// Spiral sequence per vertex: the vertex, then its BFS rings outward, each ring ordered
/// counterclockwise (about the vertex normal) from the member most aligned with the reference
/// axis. Dilation keeps every d-th entry. Isolated vertices get an all-padding row.
inline SpiralIndices build_spirals(const PartMesh& mesh, int length = kDefaultSpiralLength, int dilation = 1) {
    require(length >= 1, "spiral length must be positive");
    require(dilation >= 1, "spiral dilation must be positive");
    const int n = mesh.num_vertices();
    const auto adj = vertex_adjacency(n, mesh.faces);
    const auto normals = vertex_normals(mesh);
    SpiralIndices sp;
    sp.length = length;
    sp.dilation = dilation;
    sp.idx.setConstant(n, length, kPad);
    const int needed = (length - 1) * dilation + 1;
    std::vector<int> depth(n, -1);
    for (int v = 0; v < n; ++v) {
        if (adj[v].empty()) continue;
        const auto [t1, t2] = detail::tangent_frame(normals.normals.row(v).transpose());
        std::vector<int> seq{v}, touched{v};
        depth[v] = 0;
        std::vector<int> frontier{v};
        while (static_cast<int>(seq.size()) < needed && !frontier.empty()) {
            std::vector<int> ring;
            for (int u : frontier)
                for (int w : adj[u])
                    if (depth[w] < 0) {
                        depth[w] = depth[u] + 1;
                        ring.push_back(w);
                        touched.push_back(w);
                    }
            detail::order_ring(ring, mesh, v, t1, t2);
            seq.insert(seq.end(), ring.begin(), ring.end());
            frontier = std::move(ring);
        }
        for (int u : touched) depth[u] = -1;
        for (int s = 0; s < length && s * dilation < static_cast<int>(seq.size()); ++s) sp.idx(v, s) = seq[s * dilation];
    }
    return sp;
}

/// Row v holds the features of v's spiral entries side by side (zeros for padding).
inline Eigen::MatrixXd spiral_gather(const Eigen::MatrixXd& x, const SpiralIndices& sp) {
    require(x.rows() == sp.num_vertices(), "feature rows do not match the spiral vertex count");
    const auto c = x.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(x.rows(), sp.length * c);
    for (Eigen::Index v = 0; v < x.rows(); ++v)
        for (int s = 0; s < sp.length; ++s)
            if (const int u = sp.idx(v, s); u != kPad) g.block(v, s * c, 1, c) = x.row(u);
    return g;
}

/// Adjoint of spiral_gather: accumulates gathered-feature gradients back onto vertices.
inline Eigen::MatrixXd spiral_scatter(const Eigen::MatrixXd& dg, const SpiralIndices& sp, Eigen::Index channels) {
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(dg.rows(), channels);
    for (Eigen::Index v = 0; v < dg.rows(); ++v)
        for (int s = 0; s < sp.length; ++s)
            if (const int u = sp.idx(v, s); u != kPad) dx.row(u) += dg.block(v, s * channels, 1, channels);
    return dx;
}

/// out = gather(x) * W + b, with W of shape (length * Cin) x Cout and b a row of Cout.
inline Eigen::MatrixXd spiral_conv(const Eigen::MatrixXd& x, const SpiralIndices& sp, const Eigen::MatrixXd& w,
                                   const Eigen::MatrixXd& b) {
    require(w.rows() == sp.length * x.cols(), "spiral weights have the wrong number of rows");
    require(b.rows() == 1 && b.cols() == w.cols(), "spiral bias must be a row matching the output channels");
    Eigen::MatrixXd out = spiral_gather(x, sp) * w;
    out.rowwise() += b.row(0);
    return out;
}

struct SpiralConvGrad {
    Eigen::MatrixXd dx, dw, db;
};

inline SpiralConvGrad spiral_conv_backward(const Eigen::MatrixXd& x, const SpiralIndices& sp, const Eigen::MatrixXd& w,
                                           const Eigen::MatrixXd& dout) {
    const Eigen::MatrixXd g = spiral_gather(x, sp);
    return {spiral_scatter(dout * w.transpose(), sp, x.cols()), g.transpose() * dout, dout.colwise().sum()};
}

}  // namespace hoop::meshnet
