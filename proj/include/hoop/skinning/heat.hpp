#pragma once

#include <Eigen/SparseCholesky>

#include <deque>
#include <limits>
#include <string>

#include "hoop/skinning/voxel.hpp"
#include "hoop/skinning/weights.hpp"

namespace hoop::skinning {

enum class HeatSolver { direct, jacobi };

struct HeatOptions {
    int resolution = 64;  // voxels along the longest bounding-box side
    HeatSolver solver = HeatSolver::direct;
    double jacobi_tolerance = 1e-6;  // max per-voxel change between sweeps
    int jacobi_max_sweeps = 1000000;
};

namespace detail {

struct BoneSegment {
    int joint;
    Vec3 a, b;
};

inline double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

inline std::vector<BoneSegment> bone_segments(const Skeleton& skel, const Pose3D& rest) {
    std::vector<BoneSegment> out;
    for (int c = 0; c < skel.size(); ++c)
        if (skel.parent[c] >= 0) out.push_back({skel.parent[c], rest.joint(skel.parent[c]), rest.joint(c)});
    return out;
}

inline int nearest_bone_joint(const Vec3& p, const std::vector<BoneSegment>& bones) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& s : bones) {
        const double d = segment_distance(p, s.a, s.b);
        if (d < bd || (d == bd && s.joint < best)) bd = d, best = s.joint;
    }
    return best;
}

}  // namespace detail

/// Steady-state heat per joint on the voxelized interior. Each joint owns the segments to its
/// children; voxels on a segment are held at 1 for their owner and 0 for every other joint, and
/// all remaining voxels reachable from a source satisfy the discrete Laplace equation with
/// insulated (zero-flux) walls. The per-voxel values therefore sum to one across joints.
struct HeatField {
    VoxelGrid grid;
    std::vector<int> row;       // voxel -> row of `values`, -1 when unreached
    Eigen::MatrixXd values;     // reached voxels x joints
    int num_sources = 0;
    int sweeps = 0;             // Jacobi sweeps (0 for the direct solver)
};

inline HeatField solve_heat_field(const Points3& vertices, const Faces& faces, const Skeleton& skel,
                                  const Pose3D& rest, const HeatOptions& opt = {}) {
    skel.validate();
    require(rest.size() == skel.size(), "rest pose and skeleton have different joint counts");
    HeatField hf;
    hf.grid = voxelize(vertices, faces, opt.resolution);
    auto& g = hf.grid;
    if (g.num_inside() == 0) throw ValidationError("voxelization is empty");

    // sources: voxels on a bone, owned by the joint of the nearest segment through them
    const auto bones = detail::bone_segments(skel, rest);
    require(!bones.empty(), "skeleton has no bones to diffuse from");
    std::vector<int> owner(g.count(), -1);
    std::vector<double> owner_dist(g.count(), std::numeric_limits<double>::infinity());
    for (const auto& s : bones) {
        const int n = std::max(1, static_cast<int>(std::ceil((s.b - s.a).norm() / (0.25 * g.size))));
        int hits = 0;
        for (int i = 0; i <= n; ++i) {
            const int v = g.locate(s.a + (s.b - s.a) * (double(i) / n));
            if (v < 0 || !g.inside[v]) continue;
            ++hits;
            const auto c = g.coords(v);
            const double d = detail::segment_distance(g.center(c[0], c[1], c[2]), s.a, s.b);
            if (d < owner_dist[v] || (d == owner_dist[v] && s.joint < owner[v])) {
                owner_dist[v] = d;
                owner[v] = s.joint;
            }
        }
        if (hits == 0)
            throw ValidationError("bone of joint '" + skel.joint_names[s.joint] + "' lies outside the voxelized volume");
    }

    // reachable interior, sources first
    std::vector<int> order;
    hf.row.assign(g.count(), -1);
    std::deque<int> queue;
    for (int v = 0; v < g.count(); ++v)
        if (owner[v] >= 0) {
            hf.row[v] = static_cast<int>(order.size());
            order.push_back(v);
            queue.push_back(v);
        }
    hf.num_sources = static_cast<int>(order.size());
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        g.for_each_neighbor(v, [&](int u) {
            if (g.inside[u] && hf.row[u] < 0) {
                hf.row[u] = static_cast<int>(order.size());
                order.push_back(u);
                queue.push_back(u);
            }
        });
    }
    const int ns = hf.num_sources, nu = static_cast<int>(order.size()) - ns, nj = skel.size();
    hf.values = Eigen::MatrixXd::Zero(ns + nu, nj);
    for (int r = 0; r < ns; ++r) hf.values(r, owner[order[r]]) = 1.0;
    if (nu == 0) return hf;

    if (opt.solver == HeatSolver::direct) {
        std::vector<Eigen::Triplet<double>> t;
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nu, nj);
        for (int r = 0; r < nu; ++r) {
            const int v = order[ns + r];
            int deg = 0;
            g.for_each_neighbor(v, [&](int u) {
                if (hf.row[u] < 0) return;
                ++deg;
                if (hf.row[u] < ns)
                    rhs(r, owner[u]) += 1.0;
                else
                    t.emplace_back(r, hf.row[u] - ns, -1.0);
            });
            t.emplace_back(r, r, double(deg));
        }
        Eigen::SparseMatrix<double> L(nu, nu);
        L.setFromTriplets(t.begin(), t.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(L);
        if (ldlt.info() != Eigen::Success) throw NumericalError("heat diffusion system could not be factored");
        hf.values.bottomRows(nu) = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !hf.values.allFinite())
            throw NumericalError("heat diffusion solve failed");
    } else {
        std::vector<std::vector<int>> nbr(nu);
        for (int r = 0; r < nu; ++r)
            g.for_each_neighbor(order[ns + r], [&](int u) {
                if (hf.row[u] >= 0) nbr[r].push_back(hf.row[u]);
            });
        Eigen::MatrixXd next = hf.values;
        for (hf.sweeps = 1; hf.sweeps <= opt.jacobi_max_sweeps; ++hf.sweeps) {
            double change = 0;
            for (int r = 0; r < nu; ++r) {
                Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(nj);
                for (int u : nbr[r]) s += hf.values.row(u);
                next.row(ns + r) = s / double(nbr[r].size());
                change = std::max(change, (next.row(ns + r) - hf.values.row(ns + r)).cwiseAbs().maxCoeff());
            }
            std::swap(hf.values, next);
            if (change < opt.jacobi_tolerance) break;
        }
        if (hf.sweeps > opt.jacobi_max_sweeps) throw NumericalError("Jacobi heat diffusion did not converge");
    }
    return hf;
}

/// Per-vertex skinning weights: trilinear samples of the heat field at the vertices, top-4 pruned
/// and renormalized. Vertices without reached voxels nearby fall back to the nearest voxel within
/// two cells, then to the joint whose bone is closest.
inline SkinningWeights heat_diffusion_weights(const BodyMesh& mesh, const Skeleton& skel, const Pose3D& rest,
                                              const HeatOptions& opt = {}) {
    const PartMesh m = mesh.merged();
    const HeatField hf = solve_heat_field(m.vertices, m.faces, skel, rest, opt);
    const auto& g = hf.grid;
    const auto bones = detail::bone_segments(skel, rest);
    const int nj = skel.size();

    std::vector<Eigen::Triplet<double>> trip;
    for (int v = 0; v < m.num_vertices(); ++v) {
        const Vec3 p = m.vertex(v);
        const Vec3 q = (p - g.origin) / g.size - Vec3::Constant(0.5);
        const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y())),
                  k0 = static_cast<int>(std::floor(q.z()));
        const Vec3 fr = q - Vec3(i0, j0, k0);
        std::vector<double> row(nj, 0.0);
        double wsum = 0;
        for (int c = 0; c < 8; ++c) {
            const int i = i0 + (c & 1), j = j0 + ((c >> 1) & 1), k = k0 + ((c >> 2) & 1);
            if (!g.valid(i, j, k)) continue;
            const int r = hf.row[g.index(i, j, k)];
            if (r < 0) continue;
            const double w = ((c & 1) ? fr.x() : 1 - fr.x()) * (((c >> 1) & 1) ? fr.y() : 1 - fr.y()) *
                             (((c >> 2) & 1) ? fr.z() : 1 - fr.z());
            if (w <= 0) continue;
            wsum += w;
            for (int jj = 0; jj < nj; ++jj) row[jj] += w * hf.values(r, jj);
        }
        if (!(wsum > 1e-12)) {
            // nearest reached voxel center within two cells
            const int ci = static_cast<int>(std::floor(q.x() + 0.5)), cj = static_cast<int>(std::floor(q.y() + 0.5)),
                      ck = static_cast<int>(std::floor(q.z() + 0.5));
            double bd = std::numeric_limits<double>::infinity();
            int br = -1;
            for (int k = ck - 2; k <= ck + 2; ++k)
                for (int j = cj - 2; j <= cj + 2; ++j)
                    for (int i = ci - 2; i <= ci + 2; ++i) {
                        if (!g.valid(i, j, k) || hf.row[g.index(i, j, k)] < 0) continue;
                        const double d = (g.center(i, j, k) - p).squaredNorm();
                        if (d < bd) bd = d, br = hf.row[g.index(i, j, k)];
                    }
            if (br >= 0)
                for (int jj = 0; jj < nj; ++jj) row[jj] = hf.values(br, jj);
        }
        auto kept = prune_and_normalize(row);
        if (kept.empty()) kept = {{detail::nearest_bone_joint(p, bones), 1.0}};
        for (const auto& [jj, w] : kept) trip.emplace_back(v, jj, w);
    }
    SkinningWeights out;
    out.W.resize(m.num_vertices(), nj);
    out.W.setFromTriplets(trip.begin(), trip.end());
    return out;
}

}  // namespace hoop::skinning
