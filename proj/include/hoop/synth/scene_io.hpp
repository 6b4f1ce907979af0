#pragma once

#include <filesystem>

#include "hoop/synth/scene.hpp"

namespace hoop::synth {

inline constexpr int kSceneVersion = 1;

namespace files {
inline constexpr const char* kScene = "scene.json";
inline constexpr const char* kMask = "mask.pgm";
inline constexpr const char* kRest = "rest.obj";
inline constexpr const char* kWeights = "weights.json";
inline constexpr const char* kPosed = "posed.obj";
}  // namespace files

inline Json to_json(const court::CourtConfig& c) {
    Json j{{"preset", c.preset == court::Preset::nba ? "nba" : "fiba"}, {"scale", c.scale}};
    if (c.length) j["length"] = *c.length;
    if (c.width) j["width"] = *c.width;
    return j;
}

inline court::CourtConfig court_config_from_json(const Json& j) {
    court::CourtConfig c;
    const auto preset = j.value("preset", std::string("nba"));
    require(preset == "nba" || preset == "fiba", "unknown court preset '" + preset + "'");
    c.preset = preset == "nba" ? court::Preset::nba : court::Preset::fiba;
    c.scale = j.value("scale", 1.0);
    if (j.contains("length")) c.length = j.at("length").get<double>();
    if (j.contains("width")) c.width = j.at("width").get<double>();
    return c;
}

/// Everything except the meshes, weights and mask.
inline Json scene_json(const SceneBundle& b) {
    return {{"schema", "hoop.scene"},
            {"version", kSceneVersion},
            {"seed", b.seed},
            {"width", b.width},
            {"height", b.height},
            {"court", to_json(b.court_config)},
            {"camera", to_json(b.camera)},
            {"transforms", to_json(b.transforms)},
            {"pose3d", to_json(b.pose3d)},
            {"world", to_json(b.world)},
            {"pose2d", to_json(b.pose2d)},
            {"translation", vec_json(b.translation)},
            {"jump", to_json(b.jump)},
            {"crop", {{"origin", {b.crop.origin.x(), b.crop.origin.y()}}, {"scale", b.crop.scale}}}};
}

/// Fills the scalar and pose fields of `b` from a scene document.
inline void apply_scene_json(SceneBundle& b, const Json& j) {
    require(j.value("schema", "") == "hoop.scene", "not a scene document");
    require(j.value("version", 0) == kSceneVersion, "unsupported scene version");
    b.seed = j.at("seed").get<std::uint64_t>();
    b.width = j.at("width").get<int>();
    b.height = j.at("height").get<int>();
    b.court_config = court_config_from_json(j.at("court"));
    b.court = court::make_court_model(b.court_config);
    b.camera = camera_from_json(j.at("camera"));
    b.skeleton = canonical_skeleton();
    b.transforms = transforms_from_json(j.at("transforms"));
    b.pose3d = pose3d_from_json(j.at("pose3d"));
    b.world = pose3d_from_json(j.at("world"));
    b.pose2d = pose2d_from_json(j.at("pose2d"));
    b.translation = json_vec3(j.at("translation"));
    b.jump = jump_from_json(j.at("jump"));
    const auto& c = j.at("crop");
    b.crop.origin = Vec2(c.at("origin")[0].get<double>(), c.at("origin")[1].get<double>());
    b.crop.scale = c.at("scale").get<double>();
}

inline void save_scene(const std::filesystem::path& dir, const SceneBundle& b) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_json((dir / files::kScene).string(), scene_json(b));
    write_pgm((dir / files::kMask).string(), b.mask);
    save_obj((dir / files::kRest).string(), b.rest);
    write_json((dir / files::kWeights).string(), skinning::to_json(b.weights));
    save_obj((dir / files::kPosed).string(), b.posed);
}

inline SceneBundle load_scene(const std::filesystem::path& dir) {
    SceneBundle b;
    apply_scene_json(b, read_json((dir / files::kScene).string()));
    b.mask = read_pgm((dir / files::kMask).string());
    b.rest = load_obj((dir / files::kRest).string());
    b.weights = skinning::weights_from_json(read_json((dir / files::kWeights).string()));
    b.posed = load_obj((dir / files::kPosed).string());
    return b;
}

}  // namespace hoop::synth
