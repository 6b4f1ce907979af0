#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop::eval {

/// Static 3-d tree over a point set; nearest queries break ties toward the lower index.
class KdTree {
public:
    explicit KdTree(const Points3& pts) : pts_(pts) {
        require(pts.rows() > 0, "kd-tree over an empty point set");
        idx_.resize(pts.rows());
        std::iota(idx_.begin(), idx_.end(), 0);
        build(0, static_cast<int>(idx_.size()), 0);
    }

    struct Hit {
        int index = -1;
        double dist2 = std::numeric_limits<double>::infinity();
    };

    Hit nearest(const Vec3& q) const {
        Hit best;
        search(0, static_cast<int>(idx_.size()), 0, q, best);
        return best;
    }

private:
    void build(int lo, int hi, int depth) {
        if (hi - lo <= 1) return;
        const int axis = depth % 3, mid = (lo + hi) / 2;
        std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi, [&](int a, int b) {
            return pts_(a, axis) < pts_(b, axis) || (pts_(a, axis) == pts_(b, axis) && a < b);
        });
        build(lo, mid, depth + 1);
        build(mid + 1, hi, depth + 1);
    }

    void search(int lo, int hi, int depth, const Vec3& q, Hit& best) const {
        if (lo >= hi) return;
        const int axis = depth % 3, mid = (lo + hi) / 2, i = idx_[mid];
        const double d2 = (pts_.row(i).transpose() - q).squaredNorm();
        if (d2 < best.dist2 || (d2 == best.dist2 && i < best.index)) best = {i, d2};
        const double diff = q[axis] - pts_(i, axis);
        const bool left_first = diff <= 0;
        if (left_first)
            search(lo, mid, depth + 1, q, best);
        else
            search(mid + 1, hi, depth + 1, q, best);
        // equal split keys can sit on either side, so the far side is visited on a tie too
        if (diff * diff <= best.dist2) {
            if (left_first)
                search(mid + 1, hi, depth + 1, q, best);
            else
                search(lo, mid, depth + 1, q, best);
        }
    }

    Points3 pts_;
    std::vector<int> idx_;
};

}  // namespace hoop::eval
