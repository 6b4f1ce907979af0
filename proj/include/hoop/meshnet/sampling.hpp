#pragma once

#include <Eigen/Sparse>

#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "hoop/core/geometry.hpp"
#include "hoop/core/mesh.hpp"

namespace hoop::meshnet {

/// Down-sampling D (coarse x fine, one 1 per row) and up-sampling U (fine x coarse, barycentric rows).
struct SamplingOperator {
    SparseMatrix D, U;
    PartMesh coarse;
    std::vector<int> kept;  // fine index of each coarse vertex
    bool reached_target = true;
};

namespace detail {

using Quadric = Eigen::Matrix4d;

inline Quadric plane_quadric(const Vec3& n, const Vec3& p, double weight) {
    Eigen::Vector4d q(n.x(), n.y(), n.z(), -n.dot(p));
    return weight * q * q.transpose();
}

inline double quadric_cost(const Quadric& q, const Vec3& p) {
    const Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
    return std::max(0.0, h.dot(q * h));
}

/// Working state of a greedy half-edge collapse.
class Decimator {
public:
    explicit Decimator(const PartMesh& m) : mesh_(m), alive_(m.num_vertices(), 1), stamp_(m.num_vertices(), 0) {
        faces_.resize(m.num_faces());
        face_alive_.assign(m.num_faces(), 1);
        vfaces_.resize(m.num_vertices());
        q_.assign(m.num_vertices(), Quadric::Zero());
        for (int f = 0; f < m.num_faces(); ++f) {
            faces_[f] = {m.faces(f, 0), m.faces(f, 1), m.faces(f, 2)};
            for (int k : faces_[f]) vfaces_[k].insert(f);
            const Vec3 a = m.vertex(faces_[f][0]), b = m.vertex(faces_[f][1]), c = m.vertex(faces_[f][2]);
            const Vec3 cr = (b - a).cross(c - a);
            const double area = 0.5 * cr.norm();
            if (area <= 0) continue;
            const Quadric fq = plane_quadric(cr.normalized(), a, area);
            for (int k : faces_[f]) q_[k] += fq;
        }
        // boundary edges get a perpendicular constraint plane so open borders keep their shape
        for (const auto& [i, j] : boundary_edges(m.faces)) {
            const int f = *std::find_if(vfaces_[i].begin(), vfaces_[i].end(), [&](int g) { return vfaces_[j].count(g); });
            const Vec3 a = m.vertex(i), b = m.vertex(j), c = m.vertex(faces_[f][0]);
            const Vec3 fn = (m.vertex(faces_[f][1]) - c).cross(m.vertex(faces_[f][2]) - c);
            const Vec3 n = (b - a).cross(fn);
            if (n.norm() == 0) continue;
            const Quadric bq = plane_quadric(n.normalized(), a, 10.0 * (b - a).squaredNorm());
            q_[i] += bq;
            q_[j] += bq;
        }
        for (int f = 0; f < m.num_faces(); ++f)
            for (int k = 0; k < 3; ++k) push(faces_[f][k], faces_[f][(k + 1) % 3]);
        num_alive_ = m.num_vertices();
        num_faces_ = m.num_faces();
    }

    int num_alive() const { return num_alive_; }
    double collapse_cost(int from, int to) const { return quadric_cost(q_[from] + q_[to], mesh_.vertex(to)); }

    /// Performs the cheapest valid collapse. Returns false when none is left.
    bool step() {
        while (!heap_.empty()) {
            const auto [cost, from, to, sf, st] = heap_.top();
            heap_.pop();
            if (!alive_[from] || !alive_[to] || sf != stamp_[from] || st != stamp_[to]) continue;
            if (!valid(from, to)) continue;
            collapse(from, to);
            return true;
        }
        return false;
    }

    PartMesh result(std::vector<int>& kept) const {
        kept.clear();
        std::vector<int> remap(mesh_.num_vertices(), -1);
        for (int v = 0; v < mesh_.num_vertices(); ++v)
            if (alive_[v]) {
                remap[v] = static_cast<int>(kept.size());
                kept.push_back(v);
            }
        PartMesh out;
        out.part = mesh_.part;
        out.vertices.resize(static_cast<Eigen::Index>(kept.size()), 3);
        for (size_t i = 0; i < kept.size(); ++i) out.vertices.row(i) = mesh_.vertices.row(kept[i]);
        std::vector<std::array<int, 3>> f;
        for (size_t i = 0; i < faces_.size(); ++i)
            if (face_alive_[i]) f.push_back({remap[faces_[i][0]], remap[faces_[i][1]], remap[faces_[i][2]]});
        out.faces.resize(static_cast<Eigen::Index>(f.size()), 3);
        for (size_t i = 0; i < f.size(); ++i) out.faces.row(i) << f[i][0], f[i][1], f[i][2];
        return out;
    }

private:
    using Entry = std::tuple<double, int, int, int, int>;  // cost, from, to, stamps

    void push(int from, int to) {
        heap_.emplace(collapse_cost(from, to), from, to, stamp_[from], stamp_[to]);
        heap_.emplace(collapse_cost(to, from), to, from, stamp_[to], stamp_[from]);
    }

    std::set<int> neighbors(int v) const {
        std::set<int> n;
        for (int f : vfaces_[v])
            for (int k : faces_[f])
                if (k != v) n.insert(k);
        return n;
    }

    bool valid(int from, int to) const {
        // link condition: shared neighbours are exactly the apexes of the faces on the edge
        const auto nf = neighbors(from), nt = neighbors(to);
        std::set<int> common, apex;
        for (int k : nf)
            if (nt.count(k)) common.insert(k);
        int shared_faces = 0;
        for (int f : vfaces_[from])
            if (vfaces_[to].count(f)) {
                ++shared_faces;
                for (int k : faces_[f])
                    if (k != from && k != to) apex.insert(k);
            }
        if (shared_faces == 0 || common != apex) return false;
        if (num_faces_ - shared_faces < 1) return false;
        // moved faces must keep their orientation and stay non-degenerate
        const Vec3 target = mesh_.vertex(to);
        for (int f : vfaces_[from]) {
            if (vfaces_[to].count(f)) continue;
            std::array<Vec3, 3> p, q;
            for (int k = 0; k < 3; ++k) {
                p[k] = mesh_.vertex(faces_[f][k]);
                q[k] = faces_[f][k] == from ? target : p[k];
            }
            const Vec3 before = (p[1] - p[0]).cross(p[2] - p[0]), after = (q[1] - q[0]).cross(q[2] - q[0]);
            if (0.5 * after.norm() < kDegenerateArea || before.dot(after) <= 0) return false;
        }
        return true;
    }

    void collapse(int from, int to) {
        for (int f : std::vector<int>(vfaces_[from].begin(), vfaces_[from].end())) {
            if (vfaces_[to].count(f)) {
                face_alive_[f] = 0;
                --num_faces_;
                for (int k : faces_[f]) vfaces_[k].erase(f);
                continue;
            }
            for (int& k : faces_[f])
                if (k == from) k = to;
            vfaces_[to].insert(f);
        }
        vfaces_[from].clear();
        alive_[from] = 0;
        --num_alive_;
        q_[to] += q_[from];
        ++stamp_[to];
        for (int n : neighbors(to)) push(to, n);
    }

    const PartMesh& mesh_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<unsigned char> face_alive_, alive_;
    std::vector<std::set<int>> vfaces_;
    std::vector<Quadric> q_;
    std::vector<int> stamp_;
    int num_alive_ = 0, num_faces_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

}  // namespace detail

/// Greedy quadric-error half-edge collapse down to at most N / factor vertices. Kept vertices keep
/// their positions; removed ones are re-expressed on the nearest coarse triangle.
inline SamplingOperator build_sampling(const PartMesh& mesh, double factor) {
    require(factor >= 1.0, "down-sampling factor must be at least 1");
    mesh.validate();
    const int n = mesh.num_vertices();
    const int target = static_cast<int>(std::floor(n / factor + 1e-9));
    detail::Decimator dec(mesh);
    while (dec.num_alive() > target && dec.step()) {
    }
    SamplingOperator op;
    op.reached_target = dec.num_alive() <= target;
    op.coarse = dec.result(op.kept);
    const int nc = static_cast<int>(op.kept.size());

    std::vector<Eigen::Triplet<double>> dt, ut;
    std::vector<int> coarse_of(n, -1);
    for (int i = 0; i < nc; ++i) {
        dt.emplace_back(i, op.kept[i], 1.0);
        coarse_of[op.kept[i]] = i;
    }
    for (int v = 0; v < n; ++v) {
        if (coarse_of[v] >= 0) {
            ut.emplace_back(v, coarse_of[v], 1.0);
            continue;
        }
        const Vec3 p = mesh.vertex(v);
        double best = std::numeric_limits<double>::infinity();
        int bf = -1;
        Vec3 bw;
        for (int f = 0; f < op.coarse.num_faces(); ++f) {
            const Vec3 a = op.coarse.vertex(op.coarse.faces(f, 0)), b = op.coarse.vertex(op.coarse.faces(f, 1)),
                       c = op.coarse.vertex(op.coarse.faces(f, 2));
            const Vec3 w = closest_point_barycentric(p, a, b, c);
            const double d = (w.x() * a + w.y() * b + w.z() * c - p).squaredNorm();
            if (d < best) best = d, bf = f, bw = w;
        }
        if (bf < 0) {
            int bv = 0;
            for (int i = 1; i < nc; ++i)
                if ((op.coarse.vertex(i) - p).squaredNorm() < (op.coarse.vertex(bv) - p).squaredNorm()) bv = i;
            ut.emplace_back(v, bv, 1.0);
            continue;
        }
        for (int k = 0; k < 3; ++k)
            if (bw[k] != 0) ut.emplace_back(v, op.coarse.faces(bf, k), bw[k]);
    }
    op.D.resize(nc, n);
    op.D.setFromTriplets(dt.begin(), dt.end());
    op.U.resize(n, nc);
    op.U.setFromTriplets(ut.begin(), ut.end());
    return op;
}

}  // namespace hoop::meshnet
