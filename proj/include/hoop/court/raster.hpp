#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hoop/core/image.hpp"
#include "hoop/court/camera.hpp"
#include "hoop/court/court_model.hpp"

namespace hoop::court {

/// Binary court-line image: nonzero pixels are line pixels.
using LineMask = GrayImage;

inline constexpr double kRasterSpacing = 0.5;  // max pixel distance between stamped samples

namespace detail {
inline void stamp(LineMask& m, const Vec2& p) {
    const double x = std::floor(p.x() + 0.5), y = std::floor(p.y() + 0.5);
    if (x < 0 || y < 0 || x >= m.width || y >= m.height) return;
    m.at(static_cast<int>(x), static_cast<int>(y)) = 255;
}
}  // namespace detail

/// Projects every court primitive and draws it with 1-px stamps no more than half a pixel apart.
/// Samples behind the camera are culled.
inline LineMask rasterize_court_lines(const Camera& cam, const CourtModel& court, int width, int height) {
    require(width > 0 && height > 0, "mask size must be positive");
    cam.validate();
    LineMask mask(width, height);
    constexpr int kCoarse = 64;
    constexpr int kMaxSubsteps = 100000;
    for (const auto& prim : court.primitives) {
        const double len = length(prim);
        for (int i = 0; i < kCoarse; ++i) {
            const double t0 = double(i) / kCoarse, t1 = double(i + 1) / kCoarse;
            const auto p0 = try_project(cam, point_at(prim, t0));
            const auto p1 = try_project(cam, point_at(prim, t1));
            int n;
            if (p0 && p1)
                n = static_cast<int>(std::ceil((*p1 - *p0).norm() / kRasterSpacing));
            else
                n = static_cast<int>(std::ceil(len / kCoarse / 0.005));  // 5 mm steps through the camera plane
            n = std::clamp(n, 1, kMaxSubsteps);
            for (int k = 0; k <= n; ++k) {
                const double t = t0 + (t1 - t0) * k / n;
                if (auto p = try_project(cam, point_at(prim, t))) detail::stamp(mask, *p);
            }
        }
    }
    return mask;
}

/// Euclidean distance (pixels) from every pixel to the nearest nonzero mask pixel.
/// Exact separable squared-distance transform (lower envelope of parabolas).
inline std::vector<double> distance_transform(const LineMask& mask) {
    const int w = mask.width, h = mask.height;
    const double inf = 1e20;
    std::vector<double> d(size_t(w) * h);
    for (size_t i = 0; i < d.size(); ++i) d[i] = mask.pixels[i] ? 0.0 : inf;

    const int n = std::max(w, h);
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);
    auto pass = [&](int len) {
        int k = 0;
        v[0] = 0;
        z[0] = -inf;
        z[1] = inf;
        auto cross = [&](int q, int p) {
            return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
        };
        for (int q = 1; q < len; ++q) {
            double s = cross(q, v[k]);
            while (s <= z[k]) s = cross(q, v[--k]);
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
        }
        k = 0;
        for (int q = 0; q < len; ++q) {
            while (z[k + 1] < q) ++k;
            out[q] = double(q - v[k]) * (q - v[k]) + f[v[k]];
        }
    };
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = d[size_t(y) * w + x];
        pass(h);
        for (int y = 0; y < h; ++y) d[size_t(y) * w + x] = out[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = d[size_t(y) * w + x];
        pass(w);
        for (int x = 0; x < w; ++x) d[size_t(y) * w + x] = out[x];
    }
    for (auto& x : d) x = std::sqrt(x);
    return d;
}

/// Bilinear view over a distance field, extended outside the frame by the distance to the border.
class DistanceField {
public:
    DistanceField(const LineMask& mask) : w_(mask.width), h_(mask.height), d_(distance_transform(mask)) {}

    int width() const { return w_; }
    int height() const { return h_; }
    double at(int x, int y) const { return d_[size_t(y) * w_ + x]; }

    /// Value and gradient at a continuous pixel position (pixel centers at integers).
    double sample(const Vec2& p, Vec2* grad = nullptr) const {
        const double cx = std::clamp(p.x(), 0.0, double(w_ - 1));
        const double cy = std::clamp(p.y(), 0.0, double(h_ - 1));
        const int x0 = std::min(static_cast<int>(std::floor(cx)), std::max(w_ - 2, 0));
        const int y0 = std::min(static_cast<int>(std::floor(cy)), std::max(h_ - 2, 0));
        const int x1 = std::min(x0 + 1, w_ - 1), y1 = std::min(y0 + 1, h_ - 1);
        const double fx = cx - x0, fy = cy - y0;
        const double a = at(x0, y0), b = at(x1, y0), c = at(x0, y1), e = at(x1, y1);
        double v = (1 - fx) * (1 - fy) * a + fx * (1 - fy) * b + (1 - fx) * fy * c + fx * fy * e;
        Vec2 g((1 - fy) * (b - a) + fy * (e - c), (1 - fx) * (c - a) + fx * (e - b));
        const Vec2 out(p.x() - cx, p.y() - cy);
        const double on = out.norm();
        if (on > 0) {
            v += on;
            // inside-clamped axes keep their bilinear slope; clamped axes follow the outside distance
            if (p.x() != cx) g.x() = out.x() / on;
            if (p.y() != cy) g.y() = out.y() / on;
            if (p.x() != cx && p.y() == cy) g.y() = (1 - fx) * (c - a) + fx * (e - b);
            if (p.y() != cy && p.x() == cx) g.x() = (1 - fy) * (b - a) + fy * (e - c);
        }
        if (grad) *grad = g;
        return v;
    }

private:
    int w_, h_;
    std::vector<double> d_;
};

}  // namespace hoop::court
