#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "hoop/core/geometry.hpp"
#include "hoop/core/types.hpp"

namespace hoop::composer {

struct NearestHit {
    int face = -1;
    Vec3 point = Vec3::Zero();
    Vec3 bary = Vec3::Zero();
    double dist2 = std::numeric_limits<double>::infinity();
};

namespace detail {
/// Candidate order shared by the tree and brute force: smaller distance, then lower face index.
inline bool closer(double d, int f, const NearestHit& best) { return d < best.dist2 || (d == best.dist2 && f < best.face); }
}  // namespace detail

inline NearestHit nearest_on_face(const PartMesh& m, int f, const Vec3& p) {
    const Vec3 a = m.vertex(m.faces(f, 0)), b = m.vertex(m.faces(f, 1)), c = m.vertex(m.faces(f, 2));
    NearestHit h;
    h.face = f;
    h.bary = closest_point_barycentric(p, a, b, c);
    h.point = h.bary.x() * a + h.bary.y() * b + h.bary.z() * c;
    h.dist2 = (h.point - p).squaredNorm();
    return h;
}

/// Bounding-volume hierarchy over the triangles of one mesh for nearest-point queries.
class TriangleBvh {
public:
    explicit TriangleBvh(const PartMesh& mesh, int leaf_size = 4) : mesh_(mesh), leaf_(leaf_size) {
        require(mesh.num_faces() > 0, "nearest-triangle query on a mesh without faces");
        order_.resize(mesh.num_faces());
        std::iota(order_.begin(), order_.end(), 0);
        boxes_.resize(mesh.num_faces());
        centroids_.resize(mesh.num_faces());
        for (int f = 0; f < mesh.num_faces(); ++f) {
            for (int k = 0; k < 3; ++k) boxes_[f].extend(mesh.vertex(mesh.faces(f, k)));
            centroids_[f] = boxes_[f].center();
        }
        build(0, mesh.num_faces());
    }

    NearestHit nearest(const Vec3& p) const {
        NearestHit best;
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const Node& n = nodes_[stack.back()];
            stack.pop_back();
            if (n.box.squaredExteriorDistance(p) > best.dist2) continue;
            if (n.left < 0) {
                for (int i = n.begin; i < n.end; ++i) {
                    const auto h = nearest_on_face(mesh_, order_[i], p);
                    if (detail::closer(h.dist2, h.face, best)) best = h;
                }
                continue;
            }
            const double dl = nodes_[n.left].box.squaredExteriorDistance(p);
            const double dr = nodes_[n.right].box.squaredExteriorDistance(p);
            // push the farther child first so the nearer one is searched first
            if (dl <= dr) {
                stack.push_back(n.right);
                stack.push_back(n.left);
            } else {
                stack.push_back(n.left);
                stack.push_back(n.right);
            }
        }
        return best;
    }

    const PartMesh& mesh() const { return mesh_; }

private:
    struct Node {
        Eigen::AlignedBox3d box;
        int begin = 0, end = 0;
        int left = -1, right = -1;
    };

    int build(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        Eigen::AlignedBox3d box, cbox;
        for (int i = begin; i < end; ++i) {
            box.extend(boxes_[order_[i]]);
            cbox.extend(centroids_[order_[i]]);
        }
        nodes_[id].box = box;
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        if (end - begin <= leaf_) return id;
        int axis;
        cbox.sizes().maxCoeff(&axis);
        const int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
            return centroids_[a][axis] < centroids_[b][axis] || (centroids_[a][axis] == centroids_[b][axis] && a < b);
        });
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    const PartMesh& mesh_;
    int leaf_;
    std::vector<int> order_;
    std::vector<Eigen::AlignedBox3d> boxes_;
    std::vector<Vec3> centroids_;
    std::vector<Node> nodes_;
};

}  // namespace hoop::composer
