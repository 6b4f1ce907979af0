#pragma once

#include <chrono>
#include <filesystem>
#include <functional>

#include "hoop/composer/compose.hpp"
#include "hoop/court/refine.hpp"
#include "hoop/eval/emd.hpp"
#include "hoop/eval/metrics.hpp"
#include "hoop/placement/placement.hpp"
#include "hoop/skinning/fit.hpp"
#include "hoop/synth/scene_io.hpp"

namespace hoop::synth {

inline constexpr std::array<const char*, 5> kStages{"calibrate", "place", "skin", "compose", "eval"};

struct PipelineOptions {
    double keypoint_noise = 0.0;  // pixel sigma added to the detected court keypoints
    /// Start the line refinement from the true camera rotated by this many degrees and moved
    /// by `perturb_meters`, instead of from planar PnP.
    std::optional<double> perturb_degrees;
    double perturb_meters = 0.0;
    /// When planar PnP already reprojects the detected keypoints this closely (pixels), its camera
    /// is kept over the line-refined one: the rasterized mask cannot resolve finer than that.
    double keypoint_trust = 0.01;
    court::RefineOptions refine;
    skinning::FitConfig fit;
    composer::ComposeOptions compose;
    int emd_samples = eval::kDefaultEmdSamples;
    std::optional<std::filesystem::path> report_dir;  // one <stage>.json per stage plus report.json

    void validate() const {
        require(keypoint_noise >= 0 && std::isfinite(keypoint_noise), "keypoint noise must be nonnegative");
        require(!perturb_degrees || (*perturb_degrees >= 0 && perturb_meters >= 0), "perturbation must be nonnegative");
        require(keypoint_trust >= 0, "keypoint trust radius must be nonnegative");
        require(emd_samples > 0, "EMD sample count must be positive");
        compose.validate();
        fit.validate();
    }
};

struct PipelineReport {
    Json stages = Json::object();  // stage name -> metrics
    Camera camera;                 // estimated
    Pose3D world;                  // placed joints
    BodyMesh body;                 // skinned and composed, world frame

    Json to_json() const { return {{"stages", stages}}; }
};

/// Camera rotated about a random axis and with its optical center moved in a random direction.
inline Camera perturb_camera(const Camera& c, double degrees, double meters, Rng& rng) {
    std::normal_distribution<double> n(0, 1);
    const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
    Camera out = c;
    out.R = exp_so3(axis * degrees * std::numbers::pi / 180.0) * c.R;
    out.T = -out.R * (c.center() + dir * meters);
    return out;
}

/// Where the pipeline gets its inputs. Each getter is called inside the stage that needs it,
/// so a failing load is reported against that stage.
struct SceneSource {
    std::function<const SceneBundle&()> scene;       // poses, camera truth, court
    std::function<const court::LineMask&()> mask;
    std::function<std::pair<const BodyMesh*, const skinning::SkinningWeights*>()> rig;
    std::function<const BodyMesh&()> truth_body;

    static SceneSource from_bundle(const SceneBundle& b) {
        return {[&b]() -> const SceneBundle& { return b; }, [&b]() -> const court::LineMask& { return b.mask; },
                [&b] { return std::make_pair(&b.rest, &b.weights); }, [&b]() -> const BodyMesh& { return b.posed; }};
    }

    /// Lazily loads a directory written by save_scene. The returned source owns its cache.
    static SceneSource from_directory(const std::filesystem::path& dir) {
        struct Cache {
            std::filesystem::path dir;
            std::optional<SceneBundle> b;
            bool mask = false, rig = false, truth = false;
            SceneBundle& meta() {
                if (!b) {
                    b.emplace();
                    apply_scene_json(*b, read_json((dir / files::kScene).string()));
                }
                return *b;
            }
        };
        auto c = std::make_shared<Cache>();
        c->dir = dir;
        SceneSource s;
        s.scene = [c]() -> const SceneBundle& { return c->meta(); };
        s.mask = [c]() -> const court::LineMask& {
            auto& b = c->meta();
            if (!c->mask) b.mask = read_pgm((c->dir / files::kMask).string()), c->mask = true;
            return b.mask;
        };
        s.rig = [c] {
            auto& b = c->meta();
            if (!c->rig) {
                b.rest = load_obj((c->dir / files::kRest).string());
                b.weights = skinning::weights_from_json(read_json((c->dir / files::kWeights).string()));
                c->rig = true;
            }
            return std::make_pair(static_cast<const BodyMesh*>(&b.rest), static_cast<const skinning::SkinningWeights*>(&b.weights));
        };
        s.truth_body = [c]() -> const BodyMesh& {
            auto& b = c->meta();
            if (!c->truth) b.posed = load_obj((c->dir / files::kPosed).string()), c->truth = true;
            return b.posed;
        };
        return s;
    }
};

namespace detail {

template <class F>
Json run_stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Json metrics;
    try {
        metrics = body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    } catch (const nlohmann::json::exception& e) {
        throw StageError(name, ValidationError(e.what()));
    }
    metrics["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return metrics;
}

}  // namespace detail

struct Calibration {
    Camera camera;
    Json metrics;
};

/// Planar PnP on the visible court keypoints (or a perturbed true camera), then line refinement
/// against the mask. `mask` is only fetched once the initial camera exists.
inline Calibration calibrate_scene(const SceneBundle& s, const std::function<const court::LineMask&()>& mask,
                                   const PipelineOptions& opt = {}) {
    Rng rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
    auto corr = s.visible_keypoints();
    if (opt.keypoint_noise > 0) {
        std::normal_distribution<double> n(0, opt.keypoint_noise);
        for (auto& c : corr) c.pixel += Vec2(n(rng), n(rng));
    }
    Calibration out;
    Json& m = out.metrics;
    Camera init;
    bool trust_keypoints = false;
    if (opt.perturb_degrees) {
        init = perturb_camera(s.camera, *opt.perturb_degrees, opt.perturb_meters, rng);
        m["init"] = "perturbed";
    } else {
        const auto pnp = court::solve_pnp_planar(corr, s.width, s.height);
        init = pnp.camera;
        m["init"] = "pnp";
        m["pnp_mean_reprojection"] = pnp.mean_reprojection;
        m["pnp_max_reprojection"] = pnp.max_reprojection;
        trust_keypoints = pnp.mean_reprojection <= opt.keypoint_trust;
    }
    m["keypoints"] = corr.size();
    m["init_keypoint_error"] = court::keypoint_reprojection_error(init, s.camera, s.court, s.width, s.height);
    const auto ref = court::refine_camera_lines(init, mask(), s.court, opt.refine);
    out.camera = trust_keypoints ? init : ref.camera;
    m["camera_source"] = trust_keypoints ? "pnp" : "refined";
    m["refined_keypoint_error"] = court::keypoint_reprojection_error(ref.camera, s.camera, s.court, s.width, s.height);
    m["refine_initial_cost"] = ref.initial_cost;
    m["refine_final_cost"] = ref.final_cost;
    m["refine_history"] = ref.history;
    m["refine_stage_history"] = ref.stage_history;
    m["refine_iterations"] = ref.iterations;
    m["refine_converged"] = ref.converged;
    m["keypoint_error"] = court::keypoint_reprojection_error(out.camera, s.camera, s.court, s.width, s.height);
    m["camera"] = to_json(out.camera);
    return out;
}

struct SkinnedBody {
    BodyMesh body;
    Json metrics;
};

/// Fits bone rotations to a root-relative 3D pose, skins the rest body with them and moves it so
/// the fitted root lands on `root`.
inline SkinnedBody skin_to_pose(const Skeleton& skel, const BodyMesh& rest, const skinning::SkinningWeights& weights,
                                const Pose3D& pose3d, const Vec3& root, const skinning::FitConfig& cfg = {}) {
    skinning::FitModel model{skel, std::nullopt, std::nullopt};
    skinning::FitTargets tgt;
    tgt.joints3d = pose3d;
    const auto fit = skinning::fit_pose_to_keypoints(model, tgt, cfg);
    SkinnedBody out{skinning::lbs(rest, weights, fit.transforms, skel), {}};
    const Vec3 shift = root - fit.joints.joint(0);
    for (auto& part : out.body.parts) part.vertices.rowwise() += shift.transpose();
    if (!out.body.merged().vertices.allFinite()) throw NumericalError("skinned body has non-finite vertices");
    double worst = 0;
    for (double r : fit.residual3d) worst = std::max(worst, r);
    out.metrics = Json{{"fit_initial_cost", fit.initial_cost},
                       {"fit_final_cost", fit.final_cost},
                       {"fit_iterations", fit.iterations},
                       {"fit_max_joint_residual", worst},
                       {"vertices", out.body.total_vertices()}};
    return out;
}

/// calibrate -> place -> skin -> compose -> eval. Errors carry the name of the stage they came from.
inline PipelineReport run_pipeline(const SceneSource& src, const PipelineOptions& opt = {}) {
    try {
        opt.validate();
    } catch (const Error& e) {
        throw StageError("setup", e);
    }
    PipelineReport rep;

    rep.stages["calibrate"] = detail::run_stage("calibrate", [&] {
        auto c = calibrate_scene(src.scene(), src.mask, opt);
        rep.camera = c.camera;
        return c.metrics;
    });

    Vec3 placed_root = Vec3::Zero();
    rep.stages["place"] = detail::run_stage("place", [&] {
        const SceneBundle& s = src.scene();
        const auto p = placement::place_player(rep.camera, s.pose2d, s.pose3d, s.jump);
        rep.world = p.world;
        placed_root = p.world.joint(0);
        const int a = p.anchor_joint;
        return Json{{"anchor_joint", s.skeleton.joint_names[a]},
                    {"anchor_height", p.height},
                    {"airborne", s.jump.airborne},
                    {"lowest_joint_error", (p.world.joint(a) - s.world.joint(a)).norm()},
                    {"mean_joint_error", (p.world.positions - s.world.positions).rowwise().norm().mean()},
                    {"translation", vec_json(p.translation)}};
    });

    rep.stages["skin"] = detail::run_stage("skin", [&] {
        const SceneBundle& s = src.scene();
        const auto [rest, weights] = src.rig();
        auto sk = skin_to_pose(s.skeleton, *rest, *weights, s.pose3d, placed_root, opt.fit);
        rep.body = std::move(sk.body);
        return sk.metrics;
    });

    rep.stages["compose"] = detail::run_stage("compose", [&] {
        auto res = composer::resolve_interpenetration(rep.body, opt.compose);
        rep.body = std::move(res.body);
        return composer::to_json(res.report);
    });

    rep.stages["eval"] = detail::run_stage("eval", [&] {
        const SceneBundle& s = src.scene();
        const BodyMesh& truth = src.truth_body();
        require(truth.total_vertices() == rep.body.total_vertices(), "ground-truth body does not match the reconstruction");
        const auto lsp = eval::lsp14_indices(s.skeleton);
        const Points3 pred = rep.body.merged().vertices, gt = truth.merged().vertices;
        return Json{{"mpjpe", eval::mpjpe(rep.world, s.world, lsp, false)},
                    {"mpjpe_pa", eval::mpjpe(rep.world, s.world, lsp, true)},
                    {"mpvpe", eval::mpvpe(pred, gt, false)},
                    {"mpvpe_pa", eval::mpvpe(pred, gt, true)},
                    {"chamfer", eval::chamfer(pred, gt)},
                    {"emd", eval::emd(pred, gt, opt.emd_samples)}};
    });

    if (opt.report_dir) {
        try {
            std::error_code ec;
            std::filesystem::create_directories(*opt.report_dir, ec);
            if (ec) throw IoError("cannot create " + opt.report_dir->string() + ": " + ec.message());
            for (const char* st : kStages) write_json((*opt.report_dir / (std::string(st) + ".json")).string(), rep.stages[st]);
            write_json((*opt.report_dir / "report.json").string(), rep.to_json());
        } catch (const Error& e) {
            throw StageError("report", e);
        }
    }
    return rep;
}

inline PipelineReport run_pipeline(const SceneBundle& b, const PipelineOptions& opt = {}) {
    return run_pipeline(SceneSource::from_bundle(b), opt);
}

}  // namespace hoop::synth
