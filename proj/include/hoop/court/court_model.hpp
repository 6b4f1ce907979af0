#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hoop/core/types.hpp"

namespace hoop::court {

/// Straight court line on the y = 0 plane.
struct Segment {
    Vec3 a, b;
};

/// Circular arc on the y = 0 plane: center + r (cos t, 0, sin t), t from `start` to `end` (end > start).
struct Arc {
    Vec3 center;
    double radius;
    double start;
    double end;
};

using Primitive = std::variant<Segment, Arc>;

inline Vec3 point_at(const Primitive& p, double t) {
    if (const auto* s = std::get_if<Segment>(&p)) return s->a + t * (s->b - s->a);
    const auto& a = std::get<Arc>(p);
    const double ang = a.start + t * (a.end - a.start);
    return a.center + a.radius * Vec3(std::cos(ang), 0.0, std::sin(ang));
}

inline double length(const Primitive& p) {
    if (const auto* s = std::get_if<Segment>(&p)) return (s->b - s->a).norm();
    const auto& a = std::get<Arc>(p);
    return a.radius * (a.end - a.start);
}

enum class Preset { nba, fiba };

/// Marking geometry in meters.
struct CourtDimensions {
    double length = 28.65;
    double width = 15.24;
    double center_circle_radius = 1.83;
    double three_point_radius = 7.24;
    double three_point_sideline_offset = 0.91;
    double hoop_from_baseline = 1.60;
    double lane_width = 4.88;
    double free_throw_distance = 5.79;  // baseline to free-throw line
    double free_throw_circle_radius = 1.83;

    static CourtDimensions preset(Preset p) {
        if (p == Preset::nba) return {};
        return {28.0, 15.0, 1.8, 6.75, 0.9, 1.575, 4.9, 5.8, 1.8};
    }
    CourtDimensions scaled(double s) const {
        return {length * s,
                width * s,
                center_circle_radius * s,
                three_point_radius * s,
                three_point_sideline_offset * s,
                hoop_from_baseline * s,
                lane_width * s,
                free_throw_distance * s,
                free_throw_circle_radius * s};
    }
};

struct CourtConfig {
    Preset preset = Preset::nba;
    double scale = 1.0;
    std::optional<double> length;  // overrides the preset before scaling
    std::optional<double> width;
};

struct CourtModel {
    CourtDimensions dims;
    std::vector<Primitive> primitives;
    std::vector<Vec3> keypoints;  // identifiable marking intersections/ends

    double length() const { return dims.length; }
    double width() const { return dims.width; }

    /// Points along every primitive with at most `spacing` meters between neighbors.
    std::vector<Vec3> sample(double spacing) const {
        std::vector<Vec3> out;
        for (const auto& p : primitives) {
            const int n = std::max(1, static_cast<int>(std::ceil(hoop::court::length(p) / spacing)));
            for (int i = 0; i <= n; ++i) out.push_back(point_at(p, double(i) / n));
        }
        return out;
    }
};

inline CourtModel make_court_model(const CourtConfig& cfg = {}) {
    require(cfg.scale > 0, "court scale must be positive");
    CourtDimensions d = CourtDimensions::preset(cfg.preset);
    if (cfg.length) d.length = *cfg.length;
    if (cfg.width) d.width = *cfg.width;
    d = d.scaled(cfg.scale);
    for (double v : {d.length, d.width, d.center_circle_radius, d.three_point_radius, d.three_point_sideline_offset,
                     d.hoop_from_baseline, d.lane_width, d.free_throw_distance, d.free_throw_circle_radius})
        require(v > 0 && std::isfinite(v), "court dimensions must be positive");
    const double hl = d.length / 2, hw = d.width / 2;
    const double corner_z = hw - d.three_point_sideline_offset;
    require(d.lane_width < d.width && corner_z > 0 && corner_z < d.three_point_radius &&
                d.free_throw_distance < hl && d.three_point_radius + d.hoop_from_baseline < hl,
            "court markings do not fit inside the court extents");

    CourtModel c;
    c.dims = d;
    auto seg = [&](Vec3 a, Vec3 b) { c.primitives.emplace_back(Segment{a, b}); };
    auto P = [](double x, double z) { return Vec3(x, 0.0, z); };
    constexpr double pi = std::numbers::pi;

    seg(P(-hl, -hw), P(hl, -hw));
    seg(P(hl, -hw), P(hl, hw));
    seg(P(hl, hw), P(-hl, hw));
    seg(P(-hl, hw), P(-hl, -hw));
    seg(P(0, -hw), P(0, hw));
    c.primitives.emplace_back(Arc{P(0, 0), d.center_circle_radius, 0.0, 2 * pi});

    c.keypoints = {P(-hl, -hw), P(hl, -hw), P(hl, hw), P(-hl, hw), P(0, -hw), P(0, hw),
                   P(-d.center_circle_radius, 0), P(d.center_circle_radius, 0)};

    const double theta = std::asin(corner_z / d.three_point_radius);
    const double arc_x = d.hoop_from_baseline + std::sqrt(d.three_point_radius * d.three_point_radius - corner_z * corner_z);
    for (double s : {-1.0, 1.0}) {
        const double base = s * hl;
        const double ft = s * (hl - d.free_throw_distance);
        const double lw = d.lane_width / 2;
        // lane
        seg(P(base, -lw), P(ft, -lw));
        seg(P(base, lw), P(ft, lw));
        seg(P(ft, -lw), P(ft, lw));
        // free-throw semicircle toward midcourt
        const double mid = s > 0 ? pi : 0.0;
        c.primitives.emplace_back(Arc{P(ft, 0), d.free_throw_circle_radius, mid - pi / 2, mid + pi / 2});
        // corner threes and the arc
        const double arc_end = s * (hl - arc_x);
        seg(P(base, -corner_z), P(arc_end, -corner_z));
        seg(P(base, corner_z), P(arc_end, corner_z));
        const Vec3 hoop = P(s * (hl - d.hoop_from_baseline), 0);
        c.primitives.emplace_back(Arc{hoop, d.three_point_radius, mid - theta, mid + theta});

        c.keypoints.insert(c.keypoints.end(),
                           {P(base, -lw), P(base, lw), P(ft, -lw), P(ft, lw), P(base, -corner_z), P(base, corner_z),
                            P(arc_end, -corner_z), P(arc_end, corner_z),
                            hoop + P(-s * d.three_point_radius, 0), P(ft - s * d.free_throw_circle_radius, 0)});
    }
    return c;
}

}  // namespace hoop::court
