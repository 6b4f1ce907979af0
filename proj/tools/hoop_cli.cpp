#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "hoop/composer/compose.hpp"
#include "hoop/eval/emd.hpp"
#include "hoop/eval/icp.hpp"
#include "hoop/eval/metrics.hpp"
#include "hoop/meshnet/params.hpp"
#include "hoop/placement/placement.hpp"
#include "hoop/posemap/codec.hpp"
#include "hoop/synth/pipeline.hpp"
#include "hoop/synth/toy.hpp"

namespace fs = std::filesystem;
using namespace hoop;

namespace {

int exit_code(ErrorKind k) { return k == ErrorKind::numerical ? 3 : 2; }

std::mutex g_out;

void emit(const Json& j) {
    std::lock_guard<std::mutex> lock(g_out);
    std::cout << j.dump() << "\n";
}

void report_error(const std::string& where, const Error& e) {
    std::lock_guard<std::mutex> lock(g_out);
    std::cerr << "error" << (where.empty() ? "" : " (" + where + ")") << ": " << e.what() << "\n";
}

/// Runs `work(i)` for i in [0, n) on up to `jobs` threads. Returns the exit code of the first
/// failing item in index order, or 0.
int run_jobs(int n, int jobs, const std::function<void(int)>& work, const std::function<std::string(int)>& label) {
    std::vector<int> codes(n, 0);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                work(i);
            } catch (const Error& e) {
                report_error(label(i), e);
                codes[i] = exit_code(e.kind());
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (int c : codes)
        if (c) return c;
    return 0;
}

court::Preset parse_preset(const std::string& s) {
    if (s == "nba") return court::Preset::nba;
    if (s == "fiba") return court::Preset::fiba;
    throw ValidationError("unknown court preset '" + s + "' (nba or fiba)");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

BodyMesh load_parts_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".obj") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .obj files in " + dir.string());
    BodyMesh body;
    for (const auto& f : files) {
        Part fallback = Part::shirt;
        try {
            fallback = part_from_string(f.stem().string());
        } catch (const ValidationError&) {
        }
        for (auto& p : load_obj(f.string(), fallback).parts) {
            require(!body.find(p.part), "part " + std::string(to_string(p.part)) + " appears twice in " + dir.string());
            body.parts.push_back(std::move(p));
        }
    }
    return body;
}

struct SynthArgs {
    std::uint64_t seed = 0;
    int count = 1;
    std::string out;
    std::string court = "nba";
    std::optional<double> jump_height;
    double jump_probability = 0.5;
    double pose_sigma = 12.0;
    std::vector<double> focal{800, 3000};
    std::vector<double> elevation{5, 15};
    int heat_resolution = 48;

    synth::SynthConfig config() const {
        synth::SynthConfig c;
        c.court.preset = parse_preset(court);
        c.jump_height = jump_height;
        c.jump_probability = jump_probability;
        c.pose_sigma_deg = pose_sigma;
        c.focal = {focal.at(0), focal.at(1)};
        c.elevation = {elevation.at(0), elevation.at(1)};
        c.heat_resolution = heat_resolution;
        return c;
    }
};

void add_synth_options(CLI::App* cmd, SynthArgs& a) {
    cmd->add_option("--seed", a.seed, "first scene seed")->capture_default_str();
    cmd->add_option("--count", a.count, "number of consecutive seeds")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--court", a.court, "court preset (nba, fiba)")->capture_default_str();
    cmd->add_option("--jump-height", a.jump_height, "fixed jump height in meters");
    cmd->add_option("--jump-probability", a.jump_probability, "chance of an airborne player")->capture_default_str();
    cmd->add_option("--pose-sigma", a.pose_sigma, "per-bone rotation noise, degrees")->capture_default_str();
    cmd->add_option("--focal", a.focal, "focal length range in pixels")->expected(2)->capture_default_str();
    cmd->add_option("--elevation", a.elevation, "camera height range in meters")->expected(2)->capture_default_str();
    cmd->add_option("--heat-resolution", a.heat_resolution, "voxels along the body's longest side")->capture_default_str();
}

struct PipelineArgs {
    double noise = 0;
    std::optional<double> perturb_deg;
    double perturb_m = 0;

    synth::PipelineOptions options() const {
        synth::PipelineOptions o;
        o.keypoint_noise = noise;
        o.perturb_degrees = perturb_deg;
        o.perturb_meters = perturb_m;
        return o;
    }
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a) {
    cmd->add_option("--noise", a.noise, "pixel sigma added to detected court keypoints")->capture_default_str();
    cmd->add_option("--perturb-deg", a.perturb_deg, "start refinement from the true camera rotated this much");
    cmd->add_option("--perturb-m", a.perturb_m, "and moved this far, meters")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Basketball player reconstruction toolkit"};
    app.set_config("--config", "", "TOML-style key = value file; [section] names select subcommands");
    app.require_subcommand(1);
    app.fallthrough();
    int jobs = 1;
    app.add_option("--jobs", jobs, "parallel scenes for synth and pipeline")->check(CLI::PositiveNumber)->capture_default_str();
    std::function<int()> run;

    // ---- synth
    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic scenes with ground truth");
    add_synth_options(synth_cmd, sa);
    synth_cmd->add_option("--out", sa.out, "output directory")->required();
    synth_cmd->callback([&] {
        run = [&] {
            const auto cfg = sa.config();
            return run_jobs(
                sa.count, jobs,
                [&](int i) {
                    const auto seed = sa.seed + std::uint64_t(i);
                    const fs::path dir = sa.count == 1 ? fs::path(sa.out) : fs::path(sa.out) / ("scene_" + std::to_string(seed));
                    const auto b = synth::synth_scene(seed, cfg);
                    synth::save_scene(dir, b);
                    emit({{"seed", seed},
                          {"dir", dir.string()},
                          {"jump", to_json(b.jump)},
                          {"keypoints", b.visible_keypoints().size()},
                          {"vertices", b.rest.total_vertices()}});
                },
                [&](int i) { return "seed " + std::to_string(sa.seed + std::uint64_t(i)); });
        };
    });

    // ---- calibrate
    std::string calib_scene, calib_out;
    PipelineArgs calib_args;
    auto* calib_cmd = app.add_subcommand("calibrate", "estimate the camera of a scene directory");
    calib_cmd->add_option("--scene", calib_scene, "scene directory written by synth")->required();
    calib_cmd->add_option("--out", calib_out, "camera JSON output");
    add_pipeline_options(calib_cmd, calib_args);
    calib_cmd->callback([&] {
        run = [&] {
            const auto src = synth::SceneSource::from_directory(calib_scene);
            const auto c = synth::calibrate_scene(src.scene(), src.mask, calib_args.options());
            if (!calib_out.empty()) write_json(calib_out, to_json(c.camera));
            emit(c.metrics);
            return 0;
        };
    });

    // ---- place
    std::string place_camera, place_p2, place_p3, place_out;
    double place_height = 0;
    std::optional<bool> place_airborne;
    auto* place_cmd = app.add_subcommand("place", "put a root-relative 3D pose into the world");
    place_cmd->add_option("--camera", place_camera, "camera JSON")->required();
    place_cmd->add_option("--pose2d", place_p2, "2D pose JSON in frame pixels")->required();
    place_cmd->add_option("--pose3d", place_p3, "root-relative 3D pose JSON")->required();
    place_cmd->add_option("--jump-height", place_height, "regressed jump height, meters")->capture_default_str();
    place_cmd->add_option("--airborne", place_airborne, "jump class; defaults to height > 0.1 m");
    place_cmd->add_option("--out", place_out, "world pose JSON output");
    place_cmd->callback([&] {
        run = [&] {
            const Camera cam = camera_from_json(read_json(place_camera));
            const Pose2D p2 = pose2d_from_json(read_json(place_p2));
            const Pose3D p3 = pose3d_from_json(read_json(place_p3));
            JumpInfo jump = JumpInfo::from_height(place_height);
            if (place_airborne) jump.airborne = *place_airborne;
            const auto p = placement::place_player(cam, p2, p3, jump);
            if (!place_out.empty()) write_json(place_out, to_json(p.world));
            emit({{"anchor_joint", p.anchor_joint}, {"height", p.height}, {"translation", vec_json(p.translation)}});
            return 0;
        };
    });

    // ---- codec
    auto* codec_cmd = app.add_subcommand("codec", "pose heatmap and location-map encoding");
    codec_cmd->require_subcommand(1);
    std::string enc_p2, enc_p3, enc_heat, enc_loc;
    double enc_sigma = posemap::kDefaultSigma;
    auto* enc_cmd = codec_cmd->add_subcommand("encode", "poses to map stacks");
    enc_cmd->add_option("--pose2d", enc_p2, "2D pose JSON in crop pixels")->required();
    enc_cmd->add_option("--pose3d", enc_p3, "root-relative 3D pose JSON");
    enc_cmd->add_option("--heatmaps", enc_heat, "heatmap stack output")->required();
    enc_cmd->add_option("--locmaps", enc_loc, "location-map stack output");
    enc_cmd->add_option("--sigma", enc_sigma, "Gaussian sigma in map cells")->capture_default_str();
    enc_cmd->callback([&] {
        run = [&] {
            const Pose2D p2 = pose2d_from_json(read_json(enc_p2));
            const auto heat = posemap::encode_heatmaps(p2, enc_sigma);
            posemap::write_heatmaps(enc_heat, heat.maps);
            if (!enc_loc.empty()) {
                require(!enc_p3.empty(), "--locmaps needs --pose3d");
                posemap::write_location_maps(enc_loc, posemap::encode_location_maps(pose3d_from_json(read_json(enc_p3)), p2, enc_sigma));
            }
            emit({{"joints", p2.size()}, {"clamped", heat.clamped}});
            return 0;
        };
    });
    std::string dec_heat, dec_loc, dec_out;
    auto* dec_cmd = codec_cmd->add_subcommand("decode", "map stacks back to poses");
    dec_cmd->add_option("--heatmaps", dec_heat, "heatmap stack")->required();
    dec_cmd->add_option("--locmaps", dec_loc, "location-map stack");
    dec_cmd->add_option("--out", dec_out, "poses JSON output ({pose2d, pose3d})");
    dec_cmd->callback([&] {
        run = [&] {
            const auto heat = posemap::read_heatmaps(dec_heat);
            Json out{{"pose2d", to_json(posemap::decode_heatmaps(heat))}};
            if (!dec_loc.empty()) out["pose3d"] = to_json(posemap::decode_location_maps(posemap::read_location_maps(dec_loc), heat));
            if (!dec_out.empty()) write_json(dec_out, out);
            emit(out);
            return 0;
        };
    });

    // ---- skin
    std::string skin_rest, skin_weights, skin_weights_out, skin_transforms, skin_out;
    int skin_res = 48;
    auto* skin_cmd = app.add_subcommand("skin", "pose a rest body with linear blend skinning");
    skin_cmd->add_option("--rest", skin_rest, "rest body OBJ around the canonical skeleton")->required();
    skin_cmd->add_option("--transforms", skin_transforms, "bone transforms JSON")->required();
    skin_cmd->add_option("--weights", skin_weights, "skinning weights JSON; computed by heat diffusion when absent");
    skin_cmd->add_option("--weights-out", skin_weights_out, "write the weights used");
    skin_cmd->add_option("--heat-resolution", skin_res, "voxels along the longest side")->capture_default_str();
    skin_cmd->add_option("--out", skin_out, "posed body OBJ")->required();
    skin_cmd->callback([&] {
        run = [&] {
            const Skeleton skel = canonical_skeleton();
            const BodyMesh rest = load_obj(skin_rest);
            skinning::SkinningWeights w;
            if (!skin_weights.empty()) {
                w = skinning::weights_from_json(read_json(skin_weights));
            } else {
                skinning::HeatOptions ho;
                ho.resolution = skin_res;
                w = skinning::heat_diffusion_weights(rest, skel, rest_pose(skel), ho);
            }
            if (!skin_weights_out.empty()) write_json(skin_weights_out, skinning::to_json(w));
            const BodyMesh posed = skinning::lbs(rest, w, transforms_from_json(read_json(skin_transforms)), skel);
            save_obj(skin_out, posed);
            emit({{"vertices", posed.total_vertices()}, {"parts", posed.parts.size()}});
            return 0;
        };
    });

    // ---- compose
    std::string comp_parts, comp_out, comp_report;
    composer::ComposeOptions comp_opt;
    auto* comp_cmd = app.add_subcommand("compose", "resolve body-garment interpenetration");
    comp_cmd->add_option("--parts", comp_parts, "directory of part OBJs (head.obj, arms.obj, ...)")->required();
    comp_cmd->add_option("--out", comp_out, "composed body OBJ")->required();
    comp_cmd->add_option("--report", comp_report, "report JSON");
    comp_cmd->add_option("--band", comp_opt.band, "collision band, meters")->capture_default_str();
    comp_cmd->add_option("--push", comp_opt.push, "push distance, meters")->capture_default_str();
    comp_cmd->add_option("--max-outer", comp_opt.max_outer, "outer iterations")->capture_default_str();
    comp_cmd->add_option("--inner", comp_opt.inner_iterations, "L-BFGS iterations per relaxation")->capture_default_str();
    comp_cmd->callback([&] {
        run = [&] {
            const auto res = composer::resolve_interpenetration(load_parts_dir(comp_parts), comp_opt);
            save_obj(comp_out, res.body);
            const Json rep = composer::to_json(res.report);
            if (!comp_report.empty()) write_json(comp_report, rep);
            emit(rep);
            return 0;
        };
    });

    // ---- train-toy
    int toy_examples = 50;
    std::uint64_t toy_data_seed = 1, toy_init_seed = 0;
    meshnet::TrainConfig toy_cfg;
    toy_cfg.epochs = 125;
    toy_cfg.dropout = false;
    std::string toy_out, toy_report;
    auto* toy_cmd = app.add_subcommand("train-toy", "train the TL network on the toy arm dataset");
    toy_cmd->add_option("--examples", toy_examples, "dataset size")->check(CLI::PositiveNumber)->capture_default_str();
    toy_cmd->add_option("--data-seed", toy_data_seed, "dataset seed")->capture_default_str();
    toy_cmd->add_option("--init-seed", toy_init_seed, "parameter initialization seed")->capture_default_str();
    toy_cmd->add_option("--seed", toy_cfg.seed, "shuffle and dropout seed")->capture_default_str();
    toy_cmd->add_option("--epochs", toy_cfg.epochs, "epochs")->capture_default_str();
    toy_cmd->add_option("--batch", toy_cfg.batch, "batch size")->capture_default_str();
    toy_cmd->add_option("--lr", toy_cfg.lr, "learning rate")->capture_default_str();
    toy_cmd->add_option("--decay", toy_cfg.decay, "per-epoch learning-rate factor")->capture_default_str();
    toy_cmd->add_option("--weight-decay", toy_cfg.weight_decay, "L2 weight decay")->capture_default_str();
    toy_cmd->add_flag("--dropout,!--no-dropout", toy_cfg.dropout, "dropout in the pose encoder");
    toy_cmd->add_option("--out", toy_out, "parameter file output");
    toy_cmd->add_option("--report", toy_report, "loss curve JSON");
    toy_cmd->callback([&] {
        run = [&] {
            const auto data = synth::toy_part_dataset(toy_examples, toy_data_seed);
            const auto net = meshnet::TlNet::build(data.rest, synth::toy_net_config());
            const auto rep = meshnet::train_toy(data.examples, meshnet::init_tl_params(net, toy_init_seed), net, toy_cfg);
            if (!toy_out.empty()) meshnet::write_params(toy_out, rep.params);
            const Json j{{"steps", rep.steps},
                         {"initial_mesh_loss", rep.step_mesh_loss.empty() ? 0.0 : rep.step_mesh_loss.front()},
                         {"final_mesh_loss", rep.step_mesh_loss.empty() ? 0.0 : rep.step_mesh_loss.back()},
                         {"epoch_loss", rep.epoch_loss}};
            if (!toy_report.empty()) {
                Json full = j;
                full["step_loss"] = rep.step_loss;
                full["step_mesh_loss"] = rep.step_mesh_loss;
                write_json(toy_report, full);
            }
            emit(j);
            return 0;
        };
    });

    // ---- infer-part
    std::string inf_params, inf_pose, inf_rest, inf_out;
    auto* inf_cmd = app.add_subcommand("infer-part", "run a trained toy TL network on a pose");
    inf_cmd->add_option("--params", inf_params, "parameter file from train-toy")->required();
    inf_cmd->add_option("--pose", inf_pose, "root-relative 3-joint pose JSON")->required();
    inf_cmd->add_option("--rest", inf_rest, "rest part OBJ; the toy arm when absent");
    inf_cmd->add_option("--out", inf_out, "posed part OBJ")->required();
    inf_cmd->callback([&] {
        run = [&] {
            const PartMesh rest = inf_rest.empty() ? synth::toy_part_dataset(1, 0).rest : load_part_obj(inf_rest, Part::arms);
            const auto net = meshnet::TlNet::build(rest, synth::toy_net_config());
            const auto params = meshnet::read_params(inf_params);
            const auto shapes = meshnet::init_tl_params(net, 0);
            for (const auto& [name, m] : shapes.tensors) {
                require(params.contains(name), "parameter file lacks tensor '" + name + "'");
                require(params[name].rows() == m.rows() && params[name].cols() == m.cols(),
                        "tensor '" + name + "' has the wrong shape for this part");
            }
            const auto out = meshnet::tl_forward(pose3d_from_json(read_json(inf_pose)), rest, params, net);
            PartMesh posed = rest;
            posed.vertices = out.v_pred;
            save_obj(inf_out, posed);
            emit({{"vertices", posed.num_vertices()}});
            return 0;
        };
    });

    // ---- eval
    std::string ev_pred, ev_gt, ev_metrics = "cd,emd,mpvpe", ev_out, ev_pred_joints, ev_gt_joints;
    bool ev_icp = false;
    int ev_samples = eval::kDefaultEmdSamples;
    auto* ev_cmd = app.add_subcommand("eval", "compare a predicted body with ground truth");
    ev_cmd->add_option("--pred", ev_pred, "predicted OBJ")->required();
    ev_cmd->add_option("--gt", ev_gt, "ground-truth OBJ")->required();
    ev_cmd->add_option("--metrics", ev_metrics, "comma list of cd, emd, mpvpe, mpvpe-pa, mpjpe, mpjpe-pa")->capture_default_str();
    ev_cmd->add_flag("--icp", ev_icp, "rigidly align the prediction to the ground truth first");
    ev_cmd->add_option("--emd-samples", ev_samples, "farthest-point samples for EMD")->capture_default_str();
    ev_cmd->add_option("--pred-joints", ev_pred_joints, "predicted 3D pose JSON (for mpjpe)");
    ev_cmd->add_option("--gt-joints", ev_gt_joints, "ground-truth 3D pose JSON (for mpjpe)");
    ev_cmd->add_option("--out", ev_out, "metrics JSON output");
    ev_cmd->callback([&] {
        run = [&] {
            Points3 pred = load_obj(ev_pred).merged().vertices;
            const Points3 gt = load_obj(ev_gt).merged().vertices;
            Json out = Json::object();
            if (ev_icp) {
                const auto r = eval::icp(pred, gt);
                pred = r.aligned;
                out["icp_iterations"] = r.iterations;
                out["icp_converged"] = r.converged;
            }
            for (const auto& m : split_list(ev_metrics)) {
                if (m == "cd") {
                    out["cd"] = eval::chamfer(pred, gt);
                } else if (m == "emd") {
                    out["emd"] = eval::emd(pred, gt, ev_samples);
                } else if (m == "mpvpe" || m == "mpvpe-pa") {
                    require(pred.rows() == gt.rows(), "mpvpe needs meshes with the same vertex count");
                    out[m] = eval::mpvpe(pred, gt, m == "mpvpe-pa");
                } else if (m == "mpjpe" || m == "mpjpe-pa") {
                    require(!ev_pred_joints.empty() && !ev_gt_joints.empty(), "mpjpe needs --pred-joints and --gt-joints");
                    const Pose3D pj = pose3d_from_json(read_json(ev_pred_joints)), gj = pose3d_from_json(read_json(ev_gt_joints));
                    out[m] = eval::mpjpe(pj, gj, eval::lsp14_indices(), m == "mpjpe-pa");
                } else {
                    throw ValidationError("unknown metric '" + m + "'");
                }
            }
            if (!ev_out.empty()) write_json(ev_out, out);
            emit(out);
            return 0;
        };
    });

    // ---- pipeline
    SynthArgs pa;
    PipelineArgs pipe_args;
    std::string pipe_scene, pipe_out;
    auto* pipe_cmd = app.add_subcommand("pipeline", "calibrate, place, skin, compose and evaluate");
    pipe_cmd->add_option("--scene", pipe_scene, "scene directory; synthesizes from --seed when absent");
    add_synth_options(pipe_cmd, pa);
    add_pipeline_options(pipe_cmd, pipe_args);
    pipe_cmd->add_option("--out", pipe_out, "report directory (one subdirectory per scene)");
    pipe_cmd->callback([&] {
        run = [&] {
            auto opts = pipe_args.options();
            if (!pipe_scene.empty()) {
                if (!pipe_out.empty()) opts.report_dir = fs::path(pipe_out);
                const auto rep = synth::run_pipeline(synth::SceneSource::from_directory(pipe_scene), opts);
                emit({{"scene", pipe_scene}, {"stages", rep.stages}});
                return 0;
            }
            const auto cfg = pa.config();
            return run_jobs(
                pa.count, jobs,
                [&](int i) {
                    const auto seed = pa.seed + std::uint64_t(i);
                    auto o = opts;
                    if (!pipe_out.empty()) o.report_dir = fs::path(pipe_out) / ("scene_" + std::to_string(seed));
                    synth::SceneBundle b;
                    try {
                        b = synth::synth_scene(seed, cfg);
                    } catch (const Error& e) {
                        throw StageError("synth", e);
                    }
                    const auto rep = synth::run_pipeline(b, o);
                    emit({{"seed", seed}, {"stages", rep.stages}});
                },
                [&](int i) { return "seed " + std::to_string(pa.seed + std::uint64_t(i)); });
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        report_error("", e);
        return exit_code(e.kind());
    }
    try {
        return run ? run() : 0;
    } catch (const Error& e) {
        report_error("", e);
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        report_error("", ValidationError(e.what()));
        return 2;
    }
}
