#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "hoop/core/skeleton.hpp"
#include "hoop/core/types.hpp"

namespace hoop {

using Json = nlohmann::json;

inline Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw IoError("malformed JSON in " + path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << std::setprecision(17) << j.dump(2) << "\n";
}

// ---- OBJ -------------------------------------------------------------------

namespace detail {
inline void write_part_obj(std::ostream& out, const PartMesh& m, int base) {
    out << "# part: " << to_string(m.part) << "\n";
    out << "o " << to_string(m.part) << "\n";
    for (int v = 0; v < m.num_vertices(); ++v)
        out << "v " << m.vertices(v, 0) << " " << m.vertices(v, 1) << " " << m.vertices(v, 2) << "\n";
    for (int f = 0; f < m.num_faces(); ++f)
        out << "f " << m.faces(f, 0) + base + 1 << " " << m.faces(f, 1) + base + 1 << " " << m.faces(f, 2) + base + 1
            << "\n";
}
}  // namespace detail

inline void save_obj(const std::string& path, const BodyMesh& body) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << std::setprecision(17);
    int base = 0;
    for (const auto& p : body.parts) {
        detail::write_part_obj(out, p, base);
        base += p.num_vertices();
    }
}

inline void save_obj(const std::string& path, const PartMesh& mesh) { save_obj(path, BodyMesh{{mesh}}); }

/// Reads an OBJ whose parts are introduced by `# part: <name>` comments. Vertices before the first
/// tag (or a file without tags) form one part tagged `fallback`.
inline BodyMesh load_obj(const std::string& path, Part fallback = Part::shirt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    struct Raw {
        Part part;
        std::vector<Vec3> v;
        std::vector<std::array<int, 3>> f;  // global 0-based
        int base = 0;
    };
    std::vector<Raw> raws;
    int total = 0;
    auto current = [&]() -> Raw& {
        if (raws.empty()) raws.push_back({fallback, {}, {}, total});
        return raws.back();
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "#") {
            std::string key, name;
            if (ls >> key >> name && key == "part:") {
                if (!raws.empty() && raws.back().v.empty() && raws.back().f.empty())
                    raws.back().part = part_from_string(name);
                else
                    raws.push_back({part_from_string(name), {}, {}, total});
            }
        } else if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) throw IoError(path + ":" + std::to_string(lineno) + ": bad vertex");
            current().v.push_back(p);
            ++total;
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                const int i = std::stoi(tok.substr(0, tok.find('/')));
                idx.push_back(i > 0 ? i - 1 : total + i);
            }
            if (idx.size() < 3) throw IoError(path + ":" + std::to_string(lineno) + ": face needs 3 indices");
            for (size_t k = 1; k + 1 < idx.size(); ++k) current().f.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    BodyMesh body;
    for (auto& r : raws) {
        PartMesh m;
        m.part = r.part;
        m.vertices.resize(static_cast<Eigen::Index>(r.v.size()), 3);
        for (size_t i = 0; i < r.v.size(); ++i) m.vertices.row(i) = r.v[i].transpose();
        m.faces.resize(static_cast<Eigen::Index>(r.f.size()), 3);
        for (size_t i = 0; i < r.f.size(); ++i)
            for (int k = 0; k < 3; ++k) {
                const int local = r.f[i][k] - r.base;
                if (local < 0 || local >= m.num_vertices())
                    throw ValidationError(path + ": face references a vertex outside its part");
                m.faces(i, k) = local;
            }
        m.validate();
        body.parts.push_back(std::move(m));
    }
    return body;
}

inline PartMesh load_part_obj(const std::string& path, Part fallback = Part::shirt) {
    auto body = load_obj(path, fallback);
    if (body.parts.size() != 1) throw ValidationError(path + ": expected exactly one part");
    return body.parts.front();
}

// ---- JSON encodings of the core types ---------------------------------------

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
inline Vec3 json_vec3(const Json& j) {
    require(j.is_array() && j.size() == 3, "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Json to_json(const Skeleton& s) {
    Json joints = Json::array();
    for (int j = 0; j < s.size(); ++j)
        joints.push_back({{"name", s.joint_names[j]},
                          {"parent", s.parent[j] < 0 ? Json(nullptr) : Json(s.joint_names[s.parent[j]])},
                          {"offset", vec_json(s.rest_offsets[j])}});
    return {{"schema", "hoop.skeleton"}, {"version", kSkeletonSchemaVersion}, {"joints", joints}};
}

inline Skeleton skeleton_from_json(const Json& j) {
    Skeleton s;
    for (const auto& e : j.at("joints")) {
        s.joint_names.push_back(e.at("name").get<std::string>());
        if (e.at("parent").is_null())
            s.parent.push_back(-1);
        else
            s.parent.push_back(s.index_of(e.at("parent").get<std::string>()));
        s.rest_offsets.push_back(json_vec3(e.at("offset")));
    }
    s.validate();
    return s;
}

inline Json to_json(const Pose3D& p) {
    Json rows = Json::array();
    for (int j = 0; j < p.size(); ++j) rows.push_back(vec_json(p.joint(j)));
    return {{"frame", std::string(to_string(p.frame))}, {"positions", rows}};
}

inline Pose3D pose3d_from_json(const Json& j) {
    Pose3D p;
    const auto frame = j.value("frame", std::string("root_relative"));
    require(frame == "world" || frame == "root_relative", "unknown pose frame '" + frame + "'");
    p.frame = frame == "world" ? Frame::world : Frame::root_relative;
    const auto& rows = j.at("positions");
    p.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (size_t i = 0; i < rows.size(); ++i) p.positions.row(i) = json_vec3(rows[i]).transpose();
    require(p.positions.allFinite(), "non-finite pose coordinates");
    return p;
}

inline Json to_json(const Pose2D& p) {
    Json rows = Json::array();
    for (int j = 0; j < p.size(); ++j) rows.push_back({p.pixels(j, 0), p.pixels(j, 1)});
    Json vis = Json::array();
    for (bool v : p.visible) vis.push_back(v);
    return {{"pixels", rows}, {"visible", vis}};
}

inline Pose2D pose2d_from_json(const Json& j) {
    Pose2D p;
    const auto& rows = j.at("pixels");
    p.pixels.resize(static_cast<Eigen::Index>(rows.size()), 2);
    for (size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].is_array() && rows[i].size() == 2, "pixel rows need two entries");
        p.pixels(i, 0) = rows[i][0].get<double>();
        p.pixels(i, 1) = rows[i][1].get<double>();
    }
    if (j.contains("visible"))
        for (const auto& v : j.at("visible")) p.visible.push_back(v.get<bool>());
    else
        p.visible.assign(rows.size(), true);
    require(p.visible.size() == rows.size(), "visibility length mismatch");
    return p;
}

inline Json to_json(const BoneTransforms& t) {
    Json rot = Json::array(), trans = Json::array();
    for (const auto& b : t) {
        Json r = Json::array();
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) r.push_back(b.rotation(i, k));
        rot.push_back(r);
        trans.push_back(vec_json(b.translation));
    }
    return {{"rotations", rot}, {"translations", trans}};
}

inline BoneTransforms transforms_from_json(const Json& j) {
    const auto& rot = j.at("rotations");
    const auto& trans = j.at("translations");
    require(rot.size() == trans.size(), "rotation/translation count mismatch");
    BoneTransforms out(rot.size());
    for (size_t b = 0; b < rot.size(); ++b) {
        require(rot[b].size() == 9, "rotations are row-major 9-vectors");
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) out[b].rotation(i, k) = rot[b][i * 3 + k].get<double>();
        out[b].translation = json_vec3(trans[b]);
    }
    return out;
}

inline Json to_json(const JumpInfo& j) { return {{"airborne", j.airborne}, {"height", j.height}}; }
inline JumpInfo jump_from_json(const Json& j) {
    JumpInfo out{j.at("airborne").get<bool>(), j.at("height").get<double>()};
    require(std::isfinite(out.height) && out.height >= 0, "jump height must be finite and nonnegative");
    return out;
}

inline Points3 points_from_json(const Json& j) {
    Points3 p(static_cast<Eigen::Index>(j.size()), 3);
    for (size_t i = 0; i < j.size(); ++i) p.row(i) = json_vec3(j[i]).transpose();
    return p;
}

}  // namespace hoop
