#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop {

namespace detail {
inline PartMesh assemble(const std::vector<Vec3>& v, const std::vector<std::array<int, 3>>& f, Part part) {
    PartMesh m;
    m.part = part;
    m.vertices.resize(static_cast<Eigen::Index>(v.size()), 3);
    for (size_t i = 0; i < v.size(); ++i) m.vertices.row(i) = v[i].transpose();
    m.faces.resize(static_cast<Eigen::Index>(f.size()), 3);
    for (size_t i = 0; i < f.size(); ++i) m.faces.row(i) << f[i][0], f[i][1], f[i][2];
    return m;
}
}  // namespace detail

/// Latitude/longitude sphere with outward winding.
inline PartMesh uv_sphere(double radius, int rings, int segments, const Vec3& center = Vec3::Zero(),
                          Part part = Part::head) {
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    v.push_back(center + Vec3(0, radius, 0));
    for (int r = 1; r < rings; ++r) {
        const double phi = std::numbers::pi * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double th = 2 * std::numbers::pi * s / segments;
            v.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th), std::cos(phi), std::sin(phi) * std::sin(th)));
        }
    }
    const int south = static_cast<int>(v.size());
    v.push_back(center + Vec3(0, -radius, 0));
    auto idx = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) f.push_back({0, idx(1, s + 1), idx(1, s)});
    for (int r = 1; r < rings - 1; ++r)
        for (int s = 0; s < segments; ++s) {
            f.push_back({idx(r, s), idx(r, s + 1), idx(r + 1, s)});
            f.push_back({idx(r, s + 1), idx(r + 1, s + 1), idx(r + 1, s)});
        }
    for (int s = 0; s < segments; ++s) f.push_back({idx(rings - 1, s), idx(rings - 1, s + 1), south});
    return detail::assemble(v, f, part);
}

/// Regular nx x ny grid in the z=0 plane, spacing h, normals +z.
inline PartMesh planar_grid(int nx, int ny, double h = 1.0, Part part = Part::shirt) {
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) v.emplace_back(i * h, j * h, 0.0);
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i, b = a + 1, c = a + nx, d = c + 1;
            f.push_back({a, b, d});
            f.push_back({a, d, c});
        }
    return detail::assemble(v, f, part);
}

/// Triangular (hexagonal-neighborhood) lattice: every interior vertex has exactly six neighbors.
inline PartMesh hex_lattice(int nx, int ny, double h = 1.0, Part part = Part::shirt) {
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    const double dy = h * std::sqrt(3.0) / 2.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) v.emplace_back(i * h + (j % 2) * 0.5 * h, j * dy, 0.0);
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i, b = a + 1, c = a + nx, d = c + 1;
            if (j % 2 == 0) {
                f.push_back({a, b, c});
                f.push_back({b, d, c});
            } else {
                f.push_back({a, d, c});
                f.push_back({a, b, d});
            }
        }
    return detail::assemble(v, f, part);
}

/// Open tube around the segment a->b (no caps), outward winding.
inline PartMesh open_cylinder(const Vec3& a, const Vec3& b, double radius, int segments, int stacks,
                              Part part = Part::shirt) {
    const Vec3 axis = (b - a).normalized();
    const Vec3 ref = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = axis.cross(ref).normalized();
    const Vec3 w = axis.cross(u);
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    for (int k = 0; k <= stacks; ++k) {
        const Vec3 c = a + (b - a) * (double(k) / stacks);
        for (int s = 0; s < segments; ++s) {
            const double th = 2 * std::numbers::pi * s / segments;
            v.push_back(c + radius * (std::cos(th) * u + std::sin(th) * w));
        }
    }
    auto idx = [&](int k, int s) { return k * segments + (s % segments); };
    for (int k = 0; k < stacks; ++k)
        for (int s = 0; s < segments; ++s) {
            f.push_back({idx(k, s), idx(k, s + 1), idx(k + 1, s)});
            f.push_back({idx(k, s + 1), idx(k + 1, s + 1), idx(k + 1, s)});
        }
    // orient outward: u x w == axis, and the face (s, s+1, k+1) winds so its normal is radial
    auto m = detail::assemble(v, f, part);
    const Vec3 p0 = m.vertex(m.faces(0, 0)), p1 = m.vertex(m.faces(0, 1)), p2 = m.vertex(m.faces(0, 2));
    const Vec3 n = (p1 - p0).cross(p2 - p0);
    const Vec3 centroid = (p0 + p1 + p2) / 3.0;
    const Vec3 radial = centroid - (a + axis * axis.dot(centroid - a));
    if (n.dot(radial) < 0) m.faces.col(1).swap(m.faces.col(2));
    return m;
}

/// Closed capsule (cylinder with hemispherical caps) around segment a->b, outward winding.
inline PartMesh capsule(const Vec3& a, const Vec3& b, double radius, int segments, int stacks, int cap_rings,
                        Part part = Part::shirt) {
    const Vec3 d = b - a;
    const double len = d.norm();
    const Vec3 axis = len > 0 ? Vec3(d / len) : Vec3::UnitY();
    const Vec3 ref = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = axis.cross(ref).normalized();
    const Vec3 w = axis.cross(u);
    // profile rings from the a-pole to the b-pole: (axial position, ring radius)
    std::vector<std::pair<double, double>> rings;
    for (int r = 1; r <= cap_rings; ++r) {
        const double phi = 0.5 * std::numbers::pi * r / cap_rings;  // from pole toward equator
        rings.emplace_back(-radius * std::cos(phi), radius * std::sin(phi));
    }
    for (int k = 1; k < stacks; ++k) rings.emplace_back(len * k / stacks, radius);
    for (int r = cap_rings; r >= 1; --r) {
        const double phi = 0.5 * std::numbers::pi * r / cap_rings;
        rings.emplace_back(len + radius * std::cos(phi), radius * std::sin(phi));
    }
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    v.push_back(a - radius * axis);
    for (const auto& [t, rr] : rings)
        for (int s = 0; s < segments; ++s) {
            const double th = 2 * std::numbers::pi * s / segments;
            v.push_back(a + t * axis + rr * (std::cos(th) * u + std::sin(th) * w));
        }
    const int pole_b = static_cast<int>(v.size());
    v.push_back(b + radius * axis);
    const int nr = static_cast<int>(rings.size());
    auto idx = [&](int r, int s) { return 1 + r * segments + (s % segments); };
    // with u x w = axis, increasing s winds counterclockwise around +axis
    for (int s = 0; s < segments; ++s) f.push_back({0, idx(0, s + 1), idx(0, s)});
    for (int r = 0; r + 1 < nr; ++r)
        for (int s = 0; s < segments; ++s) {
            f.push_back({idx(r, s), idx(r, s + 1), idx(r + 1, s)});
            f.push_back({idx(r, s + 1), idx(r + 1, s + 1), idx(r + 1, s)});
        }
    for (int s = 0; s < segments; ++s) f.push_back({idx(nr - 1, s), idx(nr - 1, s + 1), pole_b});
    return detail::assemble(v, f, part);
}

/// Concatenates meshes (as disconnected components) under one part tag.
inline PartMesh concatenate(const std::vector<PartMesh>& pieces, Part part) {
    PartMesh out;
    out.part = part;
    int nv = 0, nf = 0;
    for (const auto& p : pieces) {
        nv += p.num_vertices();
        nf += p.num_faces();
    }
    out.vertices.resize(nv, 3);
    out.faces.resize(nf, 3);
    int v = 0, f = 0;
    for (const auto& p : pieces) {
        out.vertices.middleRows(v, p.num_vertices()) = p.vertices;
        out.faces.middleRows(f, p.num_faces()) = p.faces.array() + v;
        v += p.num_vertices();
        f += p.num_faces();
    }
    return out;
}

}  // namespace hoop
