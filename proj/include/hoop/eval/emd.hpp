#pragma once

#include <limits>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop::eval {

inline constexpr int kDefaultEmdSamples = 512;

/// Farthest-point subsample starting at point 0; ties go to the lower index.
inline Points3 farthest_point_sample(const Points3& pts, int count) {
    require(count >= 1, "subsample size must be positive");
    const int n = static_cast<int>(pts.rows());
    if (n <= count) return pts;
    Points3 out(count, 3);
    std::vector<double> dmin(n, std::numeric_limits<double>::infinity());
    int cur = 0;
    for (int k = 0; k < count; ++k) {
        out.row(k) = pts.row(cur);
        int next = -1;
        for (int i = 0; i < n; ++i) {
            dmin[i] = std::min(dmin[i], (pts.row(i) - pts.row(cur)).squaredNorm());
            if (next < 0 || dmin[i] > dmin[next]) next = i;
        }
        cur = next;
    }
    return out;
}

/// Minimum-cost assignment of every row to a distinct column (rows <= cols), by shortest
/// augmenting paths with potentials. Returns the column of each row.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
    require(n <= m, "assignment needs at least as many columns as rows");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(m + 1, 0);
    std::vector<int> match(m + 1, 0), way(m + 1, 0);  // match[j]: row (1-based) owning column j
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j)
                if (!used[j]) {
                    const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if (cur < minv[j]) minv[j] = cur, way[j] = j0;
                    if (minv[j] < delta) delta = minv[j], j1 = j;
                }
            for (int j = 0; j <= m; ++j)
                if (used[j])
                    u[match[j]] += delta, v[j] -= delta;
                else
                    minv[j] -= delta;
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (match[j]) col[match[j] - 1] = j - 1;
    return col;
}

/// Mean Euclidean distance of the optimal matching between farthest-point subsamples of A and B.
/// With unequal subsample sizes every point of the smaller set is matched.
inline double emd(const Points3& a, const Points3& b, int subsample = kDefaultEmdSamples) {
    require(a.rows() > 0 && b.rows() > 0, "EMD of an empty point set");
    require(a.allFinite() && b.allFinite(), "EMD inputs are not finite");
    Points3 sa = farthest_point_sample(a, subsample), sb = farthest_point_sample(b, subsample);
    if (sa.rows() > sb.rows()) std::swap(sa, sb);
    Eigen::MatrixXd cost(sa.rows(), sb.rows());
    for (Eigen::Index i = 0; i < sa.rows(); ++i)
        for (Eigen::Index j = 0; j < sb.rows(); ++j) cost(i, j) = (sa.row(i) - sb.row(j)).norm();
    const auto col = min_cost_assignment(cost);
    double s = 0;
    for (Eigen::Index i = 0; i < sa.rows(); ++i) s += cost(i, col[i]);
    return s / static_cast<double>(sa.rows());
}

}  // namespace hoop::eval
