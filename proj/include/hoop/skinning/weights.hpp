#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "hoop/core/io.hpp"
#include "hoop/core/mesh.hpp"

namespace hoop::skinning {

inline constexpr int kMaxInfluences = 4;

/// Vertices x joints, nonnegative, rows summing to one.
struct SkinningWeights {
    SparseMatrix W;

    int num_vertices() const { return static_cast<int>(W.rows()); }
    int num_joints() const { return static_cast<int>(W.cols()); }

    void validate(double tol = 1e-6) const {
        for (int v = 0; v < W.outerSize(); ++v) {
            double sum = 0;
            int nnz = 0;
            for (SparseMatrix::InnerIterator it(W, v); it; ++it) {
                require(it.value() >= 0 && std::isfinite(it.value()), "skinning weights must be finite and nonnegative");
                sum += it.value();
                nnz += it.value() != 0;
            }
            require(std::abs(sum - 1.0) <= tol, "skinning weights of vertex " + std::to_string(v) + " do not sum to 1");
            require(nnz <= kMaxInfluences, "vertex " + std::to_string(v) + " has more than four influences");
        }
    }
};

/// Keeps the `k` largest entries (lower joint index first on ties) and rescales them to sum to one.
/// Returns an empty vector when nothing positive is left.
inline std::vector<std::pair<int, double>> prune_and_normalize(const std::vector<double>& row, int k = kMaxInfluences) {
    std::vector<int> order(row.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
    std::vector<std::pair<int, double>> out;
    double sum = 0;
    for (int i = 0; i < k && i < static_cast<int>(order.size()); ++i)
        if (row[order[i]] > 0) {
            out.emplace_back(order[i], row[order[i]]);
            sum += row[order[i]];
        }
    for (auto& e : out) e.second /= sum;
    std::sort(out.begin(), out.end());
    return out;
}

inline Json to_json(const SkinningWeights& w) {
    Json trip = Json::array();
    for (int v = 0; v < w.W.outerSize(); ++v)
        for (SparseMatrix::InnerIterator it(w.W, v); it; ++it) trip.push_back({v, it.col(), it.value()});
    return {{"vertices", w.num_vertices()}, {"joints", w.num_joints()}, {"triplets", trip}};
}

inline SkinningWeights weights_from_json(const Json& j) {
    const int nv = j.at("vertices").get<int>(), nj = j.at("joints").get<int>();
    require(nv >= 0 && nj > 0, "bad skinning weight dimensions");
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : j.at("triplets")) {
        require(e.is_array() && e.size() == 3, "skinning weight triplets need three entries");
        const int v = e[0].get<int>(), c = e[1].get<int>();
        require(v >= 0 && v < nv && c >= 0 && c < nj, "skinning weight triplet out of range");
        t.emplace_back(v, c, e[2].get<double>());
    }
    SkinningWeights w;
    w.W.resize(nv, nj);
    w.W.setFromTriplets(t.begin(), t.end());
    w.validate();
    return w;
}

}  // namespace hoop::skinning
