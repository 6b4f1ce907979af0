#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoop/core/error.hpp"

namespace hoop {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline constexpr int kNumJoints = 35;
inline constexpr int kCropSize = 256;

inline bool is_rotation(const Mat3& r, double tol) {
    return (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(r.determinant() - 1.0) <= tol;
}

/// Articulated skeleton. Joints are stored in topological order: parent[j] < j, root at 0.
struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<int> parent;          // -1 for the root
    std::vector<Vec3> rest_offsets;   // meters, in the parent frame

    int size() const { return static_cast<int>(parent.size()); }

    int index_of(std::string_view name) const {
        for (int j = 0; j < size(); ++j)
            if (joint_names[j] == name) return j;
        throw ValidationError("unknown joint '" + std::string(name) + "'");
    }

    /// (parent, child) pairs for every non-root joint, in joint order.
    std::vector<std::array<int, 2>> bones() const {
        std::vector<std::array<int, 2>> out;
        for (int j = 1; j < size(); ++j) out.push_back({parent[j], j});
        return out;
    }

    std::vector<int> children(int j) const {
        std::vector<int> out;
        for (int c = 0; c < size(); ++c)
            if (parent[c] == j) out.push_back(c);
        return out;
    }

    void validate() const {
        require(size() > 0, "skeleton has no joints");
        require(joint_names.size() == parent.size() && rest_offsets.size() == parent.size(),
                "skeleton field lengths disagree");
        require(parent[0] == -1, "joint 0 must be the root");
        for (int j = 1; j < size(); ++j)
            require(parent[j] >= 0 && parent[j] < j, "skeleton parents must precede children");
        for (const auto& o : rest_offsets) require(o.allFinite(), "non-finite rest offset");
    }
};

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform operator*(const RigidTransform& o) const {
        return {rotation * o.rotation, rotation * o.translation + translation};
    }
    RigidTransform inverse() const {
        Mat3 rt = rotation.transpose();
        return {rt, -rt * translation};
    }
};

/// Local (parent-relative) rotation and extra translation per joint.
using BoneTransforms = std::vector<RigidTransform>;

inline BoneTransforms identity_transforms(int joints) { return BoneTransforms(joints); }

enum class Frame { root_relative, world };

inline std::string_view to_string(Frame f) { return f == Frame::world ? "world" : "root_relative"; }

struct Pose3D {
    Points3 positions;  // J x 3, meters
    Frame frame = Frame::root_relative;

    int size() const { return static_cast<int>(positions.rows()); }
    Vec3 joint(int j) const { return positions.row(j).transpose(); }
};

struct Pose2D {
    Points2 pixels;             // J x 2
    std::vector<bool> visible;  // per joint

    int size() const { return static_cast<int>(pixels.rows()); }
    Vec2 joint(int j) const { return pixels.row(j).transpose(); }

    static Pose2D all_visible(Points2 px) {
        Pose2D p{std::move(px), {}};
        p.visible.assign(p.pixels.rows(), true);
        return p;
    }
};

inline constexpr double kJumpThreshold = 0.1;  // meters

struct JumpInfo {
    bool airborne = false;
    double height = 0.0;  // meters above the court

    /// Ground-truth labelling: airborne iff strictly above the threshold.
    static JumpInfo from_height(double h) {
        require(h >= 0 && std::isfinite(h), "jump height must be finite and nonnegative");
        return {h > kJumpThreshold, h};
    }
    /// Height used for placement: the class gates the regressed value.
    double effective_height() const { return airborne ? height : 0.0; }
};

enum class Part { head, arms, shirt, pants, legs, shoes };

inline constexpr std::array<Part, 6> kAllParts{Part::head,  Part::arms, Part::shirt,
                                               Part::pants, Part::legs, Part::shoes};

inline std::string_view to_string(Part p) {
    switch (p) {
        case Part::head: return "head";
        case Part::arms: return "arms";
        case Part::shirt: return "shirt";
        case Part::pants: return "pants";
        case Part::legs: return "legs";
        case Part::shoes: return "shoes";
    }
    return "?";
}

inline Part part_from_string(std::string_view s) {
    for (Part p : kAllParts)
        if (to_string(p) == s) return p;
    throw ValidationError("unknown part '" + std::string(s) + "'");
}

/// Vertex counts of the released six-part template.
inline int canonical_vertex_count(Part p) {
    switch (p) {
        case Part::head: return 348;
        case Part::arms: return 842;
        case Part::shoes: return 937;
        case Part::shirt: return 2098;
        case Part::pants: return 1439;
        case Part::legs: return 372;
    }
    return 0;
}
inline constexpr int kCanonicalTotalVertices = 6036;
inline constexpr int kCanonicalTotalFaces = 11576;

inline constexpr double kDegenerateArea = 1e-12;

struct PartMesh {
    Points3 vertices;
    Faces faces;
    Part part = Part::shirt;

    int num_vertices() const { return static_cast<int>(vertices.rows()); }
    int num_faces() const { return static_cast<int>(faces.rows()); }
    Vec3 vertex(int i) const { return vertices.row(i).transpose(); }

    double face_area(int f) const {
        const Vec3 a = vertex(faces(f, 0)), b = vertex(faces(f, 1)), c = vertex(faces(f, 2));
        return 0.5 * (b - a).cross(c - a).norm();
    }

    void validate() const {
        require(vertices.allFinite(), "mesh has non-finite vertices");
        for (int f = 0; f < num_faces(); ++f) {
            for (int k = 0; k < 3; ++k)
                require(faces(f, k) >= 0 && faces(f, k) < num_vertices(),
                        "face index out of range in part " + std::string(to_string(part)));
            require(face_area(f) >= kDegenerateArea,
                    "degenerate face " + std::to_string(f) + " in part " + std::string(to_string(part)));
        }
    }

    /// True when the vertex count equals the released template's count for this part.
    bool matches_canonical_template() const { return num_vertices() == canonical_vertex_count(part); }
};

struct BodyMesh {
    std::vector<PartMesh> parts;

    int total_vertices() const {
        int n = 0;
        for (const auto& p : parts) n += p.num_vertices();
        return n;
    }
    int total_faces() const {
        int n = 0;
        for (const auto& p : parts) n += p.num_faces();
        return n;
    }

    const PartMesh* find(Part p) const {
        for (const auto& m : parts)
            if (m.part == p) return &m;
        return nullptr;
    }
    PartMesh* find(Part p) {
        for (auto& m : parts)
            if (m.part == p) return &m;
        return nullptr;
    }

    /// Offsets of each part's first vertex inside the merged vertex array.
    std::vector<int> vertex_offsets() const {
        std::vector<int> off;
        int n = 0;
        for (const auto& p : parts) {
            off.push_back(n);
            n += p.num_vertices();
        }
        return off;
    }

    /// All parts concatenated into one mesh (part tag of the result is meaningless).
    PartMesh merged() const {
        PartMesh out;
        out.vertices.resize(total_vertices(), 3);
        out.faces.resize(total_faces(), 3);
        int v = 0, f = 0;
        for (const auto& p : parts) {
            out.vertices.middleRows(v, p.num_vertices()) = p.vertices;
            out.faces.middleRows(f, p.num_faces()) = p.faces.array() + v;
            v += p.num_vertices();
            f += p.num_faces();
        }
        return out;
    }

    /// Writes merged vertex positions back into the individual parts.
    void scatter(const Points3& merged_vertices) {
        require(merged_vertices.rows() == total_vertices(), "vertex count mismatch in scatter");
        int v = 0;
        for (auto& p : parts) {
            p.vertices = merged_vertices.middleRows(v, p.num_vertices());
            v += p.num_vertices();
        }
    }

    /// Total counts must match the released template when every part does.
    bool matches_canonical_template() const {
        return parts.size() == kAllParts.size() && total_vertices() == kCanonicalTotalVertices &&
               total_faces() == kCanonicalTotalFaces;
    }
};

}  // namespace hoop
