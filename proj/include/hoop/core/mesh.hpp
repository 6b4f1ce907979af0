#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Edge = std::array<int, 2>;

/// Undirected edges (i < j), sorted, each listed once.
inline std::vector<Edge> unique_edges(const Faces& faces) {
    std::vector<Edge> e;
    e.reserve(faces.rows() * 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int k = 0; k < 3; ++k) {
            int a = faces(f, k), b = faces(f, (k + 1) % 3);
            if (a > b) std::swap(a, b);
            e.push_back({a, b});
        }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

/// Sorted neighbor lists.
inline std::vector<std::vector<int>> vertex_adjacency(int num_vertices, const Faces& faces) {
    std::vector<std::vector<int>> adj(num_vertices);
    for (const auto& [a, b] : unique_edges(faces)) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& n : adj) std::sort(n.begin(), n.end());
    return adj;
}

/// Edges used by exactly one face (open boundary of a non-watertight surface).
inline std::vector<Edge> boundary_edges(const Faces& faces) {
    std::map<Edge, int> count;
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int k = 0; k < 3; ++k) {
            int a = faces(f, k), b = faces(f, (k + 1) % 3);
            if (a > b) std::swap(a, b);
            ++count[{a, b}];
        }
    std::vector<Edge> out;
    for (const auto& [e, c] : count)
        if (c == 1) out.push_back(e);
    return out;
}

inline Eigen::MatrixX3d face_normals(const PartMesh& mesh) {
    Eigen::MatrixX3d n(mesh.num_faces(), 3);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Vec3 a = mesh.vertex(mesh.faces(f, 0));
        const Vec3 b = mesh.vertex(mesh.faces(f, 1));
        const Vec3 c = mesh.vertex(mesh.faces(f, 2));
        n.row(f) = (b - a).cross(c - a).normalized().transpose();
    }
    return n;
}

struct VertexNormals {
    Points3 normals;            // unit rows; zero for isolated vertices
    std::vector<int> isolated;  // vertices referenced by no face
};

/// Area-weighted vertex normals; orientation follows face winding.
inline VertexNormals vertex_normals(const PartMesh& mesh) {
    VertexNormals out;
    out.normals = Points3::Zero(mesh.num_vertices(), 3);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const int i = mesh.faces(f, 0), j = mesh.faces(f, 1), k = mesh.faces(f, 2);
        const Vec3 a = mesh.vertex(i);
        // cross product magnitude is twice the face area, so the sum is area weighted
        const Vec3 n = (mesh.vertex(j) - a).cross(mesh.vertex(k) - a);
        for (int v : {i, j, k}) out.normals.row(v) += n.transpose();
    }
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const double len = out.normals.row(v).norm();
        if (len > 0)
            out.normals.row(v) /= len;
        else
            out.isolated.push_back(v);
    }
    return out;
}

/// Uniform graph Laplacian: (L x)_i = mean of neighbors - x_i. Isolated vertices get a zero row.
inline SparseMatrix uniform_laplacian(const PartMesh& mesh) {
    const auto adj = vertex_adjacency(mesh.num_vertices(), mesh.faces);
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        if (adj[i].empty()) continue;
        const double w = 1.0 / static_cast<double>(adj[i].size());
        for (int j : adj[i]) t.emplace_back(i, j, w);
        t.emplace_back(i, i, -1.0);
    }
    SparseMatrix l(mesh.num_vertices(), mesh.num_vertices());
    l.setFromTriplets(t.begin(), t.end());
    return l;
}

inline std::vector<double> edge_lengths(const Points3& v, const std::vector<Edge>& edges) {
    std::vector<double> out(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) out[e] = (v.row(edges[e][0]) - v.row(edges[e][1])).norm();
    return out;
}

inline PartMesh flip_winding(PartMesh m) {
    m.faces.col(1).swap(m.faces.col(2));
    return m;
}

}  // namespace hoop
