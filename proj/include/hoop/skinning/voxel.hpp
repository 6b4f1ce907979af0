#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <deque>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop::skinning {

/// Cubic-voxel occupancy grid over a padded bounding box.
struct VoxelGrid {
    Vec3 origin = Vec3::Zero();  // corner of voxel (0,0,0)
    double size = 0;             // voxel edge length
    std::array<int, 3> dims{0, 0, 0};
    std::vector<unsigned char> inside;  // surface or interior

    int count() const { return dims[0] * dims[1] * dims[2]; }
    int index(int i, int j, int k) const { return (k * dims[1] + j) * dims[0] + i; }
    std::array<int, 3> coords(int idx) const {
        return {idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1])};
    }
    bool valid(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
    }
    Vec3 center(int i, int j, int k) const { return origin + size * Vec3(i + 0.5, j + 0.5, k + 0.5); }
    /// Voxel containing p, or -1 outside the grid.
    int locate(const Vec3& p) const {
        const Vec3 q = (p - origin) / size;
        const int i = static_cast<int>(std::floor(q.x())), j = static_cast<int>(std::floor(q.y())),
                  k = static_cast<int>(std::floor(q.z()));
        return valid(i, j, k) ? index(i, j, k) : -1;
    }
    int num_inside() const {
        int n = 0;
        for (auto v : inside) n += v != 0;
        return n;
    }

    /// Face-adjacent neighbours of a voxel that lie in the grid.
    template <class F>
    void for_each_neighbor(int idx, F&& f) const {
        static constexpr int kOff[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        const auto c = coords(idx);
        for (const auto& o : kOff)
            if (valid(c[0] + o[0], c[1] + o[1], c[2] + o[2])) f(index(c[0] + o[0], c[1] + o[1], c[2] + o[2]));
    }
};

/// Marks voxels touched by the surface, then everything not reachable from the grid border.
/// `resolution` voxels span the longest bounding-box side.
inline VoxelGrid voxelize(const Points3& vertices, const Faces& faces, int resolution) {
    require(resolution >= 2, "voxel resolution must be at least 2");
    if (vertices.rows() == 0 || faces.rows() == 0) throw ValidationError("cannot voxelize an empty mesh");
    const Vec3 lo = vertices.colwise().minCoeff().transpose(), hi = vertices.colwise().maxCoeff().transpose();
    const double extent = (hi - lo).maxCoeff();
    if (!(extent > 0)) throw ValidationError("cannot voxelize a mesh with zero extent");

    VoxelGrid g;
    g.size = extent / resolution;
    g.origin = lo - Vec3::Constant(g.size);  // one voxel of padding on every side
    for (int a = 0; a < 3; ++a) g.dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / g.size)) + 2;
    std::vector<unsigned char> surface(g.count(), 0);

    const double step = 0.25 * g.size;
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        const Vec3 a = vertices.row(faces(f, 0)), b = vertices.row(faces(f, 1)), c = vertices.row(faces(f, 2));
        const int n = std::max(1, static_cast<int>(std::ceil(std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()}) / step)));
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j) {
                const Vec3 p = a + (b - a) * (double(i) / n) + (c - a) * (double(j) / n);
                if (int idx = g.locate(p); idx >= 0) surface[idx] = 1;
            }
    }

    // flood the exterior from a padding corner
    std::vector<unsigned char> outside(g.count(), 0);
    std::deque<int> queue{0};
    outside[0] = 1;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        g.for_each_neighbor(v, [&](int u) {
            if (!outside[u] && !surface[u]) {
                outside[u] = 1;
                queue.push_back(u);
            }
        });
    }
    g.inside.resize(g.count());
    for (int i = 0; i < g.count(); ++i) g.inside[i] = !outside[i];
    return g;
}

}  // namespace hoop::skinning
