#pragma once

#include <map>
#include <numbers>

#include "hoop/composer/bvh.hpp"
#include "hoop/core/mesh.hpp"

namespace hoop::composer {

inline constexpr double kDefaultBand = 0.05;  // meters

/// A garment prepared for side tests: nearest triangle plus angle-weighted pseudo-normals on
/// edges and vertices, so the sign of (v - p) . n is consistent wherever p lands.
class GarmentSurface {
public:
    explicit GarmentSurface(PartMesh garment) : mesh_(std::move(garment)), bvh_(mesh_) {
        const int nf = mesh_.num_faces();
        face_n_ = face_normals(mesh_);
        vertex_n_ = Points3::Zero(mesh_.num_vertices(), 3);
        for (int f = 0; f < nf; ++f)
            for (int k = 0; k < 3; ++k) {
                const int i = mesh_.faces(f, k), j = mesh_.faces(f, (k + 1) % 3), l = mesh_.faces(f, (k + 2) % 3);
                const Vec3 e1 = (mesh_.vertex(j) - mesh_.vertex(i)).normalized();
                const Vec3 e2 = (mesh_.vertex(l) - mesh_.vertex(i)).normalized();
                const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
                vertex_n_.row(i) += angle * face_n_.row(f);
                auto& en = edge_n_.try_emplace(key(i, j), Vec3::Zero(), 0).first->second;
                en.first += face_n_.row(f).transpose();
                ++en.second;
            }
        boundary_vertex_.assign(mesh_.num_vertices(), 0);
        for (const auto& [e, n] : edge_n_)
            if (n.second == 1) boundary_vertex_[e[0]] = boundary_vertex_[e[1]] = 1;
    }
    GarmentSurface(const GarmentSurface&) = delete;
    GarmentSurface& operator=(const GarmentSurface&) = delete;

    struct Query {
        NearestHit hit;
        Vec3 normal = Vec3::Zero();
        bool on_boundary = false;  // nearest point lies on an open rim of the garment
    };

    Query query(const Vec3& p) const { return classify(bvh_.nearest(p)); }

    /// Normal and rim status for a nearest hit found by any means.
    Query classify(const NearestHit& h) const {
        Query q{h, Vec3::Zero(), false};
        int zero = 0;
        for (int k = 0; k < 3; ++k) zero += h.bary[k] == 0.0;
        if (zero == 0) {
            q.normal = face_n_.row(h.face).transpose();
        } else if (zero == 1) {
            int a = -1, b = -1;
            for (int k = 0; k < 3; ++k)
                if (h.bary[k] != 0.0) (a < 0 ? a : b) = mesh_.faces(h.face, k);
            const auto& en = edge_n_.at(key(a, b));
            q.normal = en.first.normalized();
            q.on_boundary = en.second == 1;
        } else {
            int v = 0;
            for (int k = 0; k < 3; ++k)
                if (h.bary[k] != 0.0) v = mesh_.faces(h.face, k);
            q.normal = vertex_n_.row(v).transpose().normalized();
            q.on_boundary = boundary_vertex_[v] != 0;
        }
        return q;
    }

    const PartMesh& mesh() const { return mesh_; }

private:
    static Edge key(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

    PartMesh mesh_;
    TriangleBvh bvh_;
    Eigen::MatrixX3d face_n_;
    Points3 vertex_n_;
    std::map<Edge, std::pair<Vec3, int>> edge_n_;  // summed face normals, face count
    std::vector<char> boundary_vertex_;
};

struct Collision {
    int vertex = -1;
    Vec3 point = Vec3::Zero();   // nearest garment point
    Vec3 normal = Vec3::Zero();  // outward garment normal there
    double distance = 0;
};

struct CollisionReport {
    Part body = Part::arms;
    Part garment = Part::shirt;
    std::vector<Collision> hits;  // ascending vertex index

    int count() const { return static_cast<int>(hits.size()); }
    std::vector<int> vertices() const {
        std::vector<int> v;
        for (const auto& h : hits) v.push_back(h.vertex);
        return v;
    }
};

/// The collision predicate: outside the garment shell and within `band` of it. Points whose
/// nearest garment point is on an open rim are never flagged, since a body part leaving a
/// sleeve or leg opening is outside the shell without penetrating it.
inline bool is_collision(const Vec3& v, const GarmentSurface::Query& q, double band) {
    return !q.on_boundary && (v - q.hit.point).dot(q.normal) > 0 && std::sqrt(q.hit.dist2) < band;
}

inline CollisionReport detect_collisions(const PartMesh& body, const GarmentSurface& garment,
                                         double band = kDefaultBand) {
    require(band > 0, "collision band must be positive");
    CollisionReport r;
    r.body = body.part;
    r.garment = garment.mesh().part;
    for (int v = 0; v < body.num_vertices(); ++v) {
        const Vec3 p = body.vertex(v);
        const auto q = garment.query(p);
        if (is_collision(p, q, band)) r.hits.push_back({v, q.hit.point, q.normal, std::sqrt(q.hit.dist2)});
    }
    return r;
}

inline CollisionReport detect_collisions(const PartMesh& body, const PartMesh& garment, double band = kDefaultBand) {
    require(garment.num_faces() > 0, "garment " + std::string(to_string(garment.part)) + " is empty");
    return detect_collisions(body, GarmentSurface(garment), band);
}

/// Body/garment pairs that are checked: shirt against arms and head, pants against legs.
inline constexpr std::array<std::pair<Part, Part>, 3> kCollisionPairs{
    {{Part::arms, Part::shirt}, {Part::head, Part::shirt}, {Part::legs, Part::pants}}};

}  // namespace hoop::composer
