#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop::posemap {

inline constexpr int kMapResolution = 64;
inline constexpr double kDefaultSigma = 1.0;
/// Gaussian support radius in units of sigma; cells farther out are exactly zero.
inline constexpr double kSupportRadius = 3.0;

/// Per-joint 2D score maps, stored [joint][row][col].
struct HeatmapStack {
    int joints = 0;
    int resolution = kMapResolution;
    std::vector<double> values;

    HeatmapStack() = default;
    HeatmapStack(int j, int res = kMapResolution) : joints(j), resolution(res), values(size_t(j) * res * res, 0.0) {}

    double& at(int j, int row, int col) { return values[(size_t(j) * resolution + row) * resolution + col]; }
    double at(int j, int row, int col) const { return values[(size_t(j) * resolution + row) * resolution + col]; }
};

/// Per-joint XYZ maps, stored [joint][channel][row][col], meters, root-relative.
struct LocationMapStack {
    int joints = 0;
    int resolution = kMapResolution;
    std::vector<double> values;

    LocationMapStack() = default;
    LocationMapStack(int j, int res = kMapResolution)
        : joints(j), resolution(res), values(size_t(j) * 3 * res * res, 0.0) {}

    double& at(int j, int c, int row, int col) {
        return values[((size_t(j) * 3 + c) * resolution + row) * resolution + col];
    }
    double at(int j, int c, int row, int col) const {
        return values[((size_t(j) * 3 + c) * resolution + row) * resolution + col];
    }
};

struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

/// Crop pixel -> map cell (floor of pixel / stride), clamped into the map.
inline Cell pixel_to_cell(const Vec2& px, int resolution = kMapResolution) {
    const double stride = double(kCropSize) / resolution;
    auto q = [&](double v) { return std::clamp(static_cast<int>(std::floor(v / stride)), 0, resolution - 1); };
    return {q(px.y()), q(px.x())};
}

/// Map cell -> crop pixel at the cell center.
inline Vec2 cell_to_pixel(const Cell& c, int resolution = kMapResolution) {
    const double stride = double(kCropSize) / resolution;
    return {stride * c.col + stride / 2, stride * c.row + stride / 2};
}

struct HeatmapEncoding {
    HeatmapStack maps;
    std::vector<int> clamped;  // visible joints that fell outside the crop
};

namespace detail {
template <class Visit>
void for_each_support_cell(const Cell& center, double sigma, int res, Visit&& visit) {
    const double radius = kSupportRadius * sigma;
    const int r = static_cast<int>(std::floor(radius));
    for (int row = std::max(0, center.row - r); row <= std::min(res - 1, center.row + r); ++row)
        for (int col = std::max(0, center.col - r); col <= std::min(res - 1, center.col + r); ++col) {
            const double d2 = double(row - center.row) * (row - center.row) + double(col - center.col) * (col - center.col);
            if (d2 <= radius * radius) visit(row, col, std::exp(-d2 / (2 * sigma * sigma)));
        }
}

inline bool in_crop(const Vec2& p) { return p.x() >= 0 && p.y() >= 0 && p.x() < kCropSize && p.y() < kCropSize; }
}  // namespace detail

/// Unnormalized Gaussian (peak 1) on the joint's cell; invisible joints give all-zero maps.
inline HeatmapEncoding encode_heatmaps(const Pose2D& pose, double sigma = kDefaultSigma,
                                       int resolution = kMapResolution) {
    require(sigma > 0, "heatmap sigma must be positive");
    require(static_cast<int>(pose.visible.size()) == pose.size(), "pose visibility length mismatch");
    HeatmapEncoding out{HeatmapStack(pose.size(), resolution), {}};
    for (int j = 0; j < pose.size(); ++j) {
        if (!pose.visible[j]) continue;
        const Vec2 px = pose.joint(j);
        require(px.allFinite(), "non-finite joint pixel");
        if (!detail::in_crop(px)) out.clamped.push_back(j);
        detail::for_each_support_cell(pixel_to_cell(px, resolution), sigma, resolution,
                                      [&](int r, int c, double v) { out.maps.at(j, r, c) = v; });
    }
    return out;
}

/// Row-major-first argmax; nullopt for an all-zero map.
inline std::optional<Cell> argmax_cell(const HeatmapStack& maps, int j) {
    std::optional<Cell> best;
    double best_v = 0.0;
    for (int r = 0; r < maps.resolution; ++r)
        for (int c = 0; c < maps.resolution; ++c) {
            const double v = maps.at(j, r, c);
            if (v > best_v) {
                best_v = v;
                best = Cell{r, c};
            }
        }
    return best;
}

inline Pose2D decode_heatmaps(const HeatmapStack& maps) {
    Pose2D pose;
    pose.pixels = Points2::Zero(maps.joints, 2);
    pose.visible.assign(maps.joints, false);
    for (int j = 0; j < maps.joints; ++j)
        if (auto cell = argmax_cell(maps, j)) {
            pose.pixels.row(j) = cell_to_pixel(*cell, maps.resolution).transpose();
            pose.visible[j] = true;
        }
    return pose;
}

/// Writes each joint's root-relative XYZ onto the support of its heatmap.
inline LocationMapStack encode_location_maps(const Pose3D& pose3d, const Pose2D& pose2d, double sigma = kDefaultSigma,
                                             int resolution = kMapResolution) {
    require(pose3d.frame == Frame::root_relative, "location maps need a root-relative 3D pose");
    require(pose3d.size() == pose2d.size(), "2D/3D joint count mismatch");
    const auto heat = encode_heatmaps(pose2d, sigma, resolution);
    LocationMapStack loc(pose3d.size(), resolution);
    for (int j = 0; j < pose3d.size(); ++j)
        for (int r = 0; r < resolution; ++r)
            for (int c = 0; c < resolution; ++c)
                if (heat.maps.at(j, r, c) != 0.0)
                    for (int k = 0; k < 3; ++k) loc.at(j, k, r, c) = pose3d.positions(j, k);
    return loc;
}

/// Samples XYZ at each heatmap argmax; joints with empty heatmaps decode to the origin.
inline Pose3D decode_location_maps(const LocationMapStack& loc, const HeatmapStack& heat) {
    require(loc.joints == heat.joints && loc.resolution == heat.resolution, "location/heatmap stacks misaligned");
    Pose3D pose;
    pose.frame = Frame::root_relative;
    pose.positions = Points3::Zero(loc.joints, 3);
    for (int j = 0; j < loc.joints; ++j)
        if (auto cell = argmax_cell(heat, j))
            for (int k = 0; k < 3; ++k) pose.positions(j, k) = loc.at(j, k, cell->row, cell->col);
    return pose;
}

// ---- binary stack files: u32 joints, u32 resolution, then little-endian f32 values ----

namespace detail {
inline void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated stack header");
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}
inline void write_stack(const std::string& path, int joints, int res, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    put_u32(out, static_cast<std::uint32_t>(joints));
    put_u32(out, static_cast<std::uint32_t>(res));
    for (double v : values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
}
inline std::vector<double> read_stack(const std::string& path, int channels, int& joints, int& res) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    joints = static_cast<int>(get_u32(in));
    res = static_cast<int>(get_u32(in));
    if (joints <= 0 || res <= 0 || res > 4096) throw IoError("implausible stack header in " + path);
    std::vector<double> values(size_t(joints) * channels * res * res);
    for (auto& v : values) {
        const std::uint32_t bits = get_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        v = f;
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in " + path);
    return values;
}
}  // namespace detail

inline void write_heatmaps(const std::string& path, const HeatmapStack& h) {
    detail::write_stack(path, h.joints, h.resolution, h.values);
}
inline HeatmapStack read_heatmaps(const std::string& path) {
    HeatmapStack h;
    h.values = detail::read_stack(path, 1, h.joints, h.resolution);
    return h;
}
inline void write_location_maps(const std::string& path, const LocationMapStack& l) {
    detail::write_stack(path, l.joints, l.resolution, l.values);
}
inline LocationMapStack read_location_maps(const std::string& path) {
    LocationMapStack l;
    l.values = detail::read_stack(path, 3, l.joints, l.resolution);
    return l;
}

}  // namespace hoop::posemap
