#pragma once

#include <numbers>
#include <random>

#include "hoop/core/primitives.hpp"
#include "hoop/core/rotation.hpp"
#include "hoop/meshnet/train.hpp"

namespace hoop::synth {

/// Small network sized for the toy arm part below.
inline meshnet::NetConfig toy_net_config() {
    meshnet::NetConfig c;
    c.pose_joints = 3;
    c.pose_hidden = 32;
    c.res_blocks = 1;
    c.res_layers = 2;
    c.dropout = 0.1;
    c.enc_channels = {8, 16};
    c.dec_channels = {16, 8, 3};
    c.ds_factors = {2, 2};
    c.enc_dilation = {1, 1};
    c.dec_dilation = {1, 1, 1};
    c.spiral_length = 7;
    c.latent = 16;
    return c;
}

struct ToyDataset {
    PartMesh rest;
    std::vector<meshnet::TrainExample> examples;
};

inline constexpr double kToyArmLength = 0.5;
inline constexpr double kToyElbow = 0.25;

/// Straight capsule arm along +x, bent at the elbow by a random angle per example. The three pose
/// joints are shoulder, elbow and tip; vertices blend between the two bones over 10 cm around
/// the elbow.
inline ToyDataset toy_part_dataset(int count, std::uint64_t seed, double max_bend_deg = 60.0) {
    require(count > 0, "toy dataset needs at least one example");
    require(max_bend_deg >= 0 && max_bend_deg < 180, "bend range must be within [0, 180) degrees");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    ToyDataset d;
    d.rest = capsule(Vec3::Zero(), Vec3(kToyArmLength, 0, 0), 0.05, 8, 10, 2, Part::arms);
    const Vec3 elbow(kToyElbow, 0, 0);
    for (int i = 0; i < count; ++i) {
        const double bend = u(rng) * max_bend_deg * std::numbers::pi / 180.0;
        const double twist = 0.2 * u(rng);
        const Mat3 r = exp_so3(Vec3(twist, 0, bend));
        meshnet::TrainExample ex;
        ex.pose.frame = Frame::root_relative;
        ex.pose.positions.resize(3, 3);
        ex.pose.positions.row(0).setZero();
        ex.pose.positions.row(1) = elbow.transpose();
        ex.pose.positions.row(2) = (elbow + r * Vec3(kToyArmLength - kToyElbow, 0, 0)).transpose();
        ex.rest = d.rest;
        ex.posed = d.rest;
        for (int v = 0; v < d.rest.num_vertices(); ++v) {
            const Vec3 x = d.rest.vertex(v);
            const double w = std::clamp((kToyElbow + 0.05 - x.x()) / 0.1, 0.0, 1.0);
            ex.posed.vertices.row(v) = (w * x + (1 - w) * (r * (x - elbow) + elbow)).transpose();
        }
        d.examples.push_back(std::move(ex));
    }
    return d;
}

}  // namespace hoop::synth
