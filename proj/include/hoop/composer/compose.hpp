#pragma once

#include <memory>

#include "hoop/composer/collision.hpp"
#include "hoop/composer/penetration.hpp"
#include "hoop/core/io.hpp"
#include "hoop/core/lbfgs.hpp"

namespace hoop::composer {

struct ComposeOptions {
    double band = kDefaultBand;
    double push = 0.01;  // meters, against the body vertex normal
    int inner_iterations = 20;
    int max_outer = 10;
    int memory = 10;
    PenetrationWeights weights;

    void validate() const {
        require(band > 0 && push > 0, "band and push distance must be positive");
        require(inner_iterations >= 0 && max_outer >= 0 && memory >= 1, "bad iteration limits");
    }
};

struct RelaxResult {
    Points3 vertices;
    LbfgsReport report;
};

/// Minimizes the penetration loss over the unpinned vertices, starting from `start`.
/// Pinned rows are copied from `start` and never touched.
inline RelaxResult relax_with_pins(const PartMesh& mesh, const Points3& v_star, const Points3& start,
                                   const std::vector<char>& pinned, const ComposeOptions& opt = {}) {
    require(start.rows() == mesh.num_vertices() && static_cast<int>(pinned.size()) == mesh.num_vertices(),
            "relaxation inputs disagree in vertex count");
    const PenetrationLoss loss(mesh, v_star, opt.weights);
    std::vector<int> free;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!pinned[v]) free.push_back(v);
    RelaxResult out{start, {}};
    Eigen::VectorXd x(3 * free.size());
    for (size_t i = 0; i < free.size(); ++i) x.segment<3>(3 * i) = start.row(free[i]).transpose();
    Points3 v = start, g;
    auto f = [&](const Eigen::VectorXd& xx, Eigen::VectorXd* grad) {
        for (size_t i = 0; i < free.size(); ++i) v.row(free[i]) = xx.segment<3>(3 * i).transpose();
        const double val = loss(v, grad ? &g : nullptr);
        if (grad) {
            grad->resize(xx.size());
            for (size_t i = 0; i < free.size(); ++i) grad->segment<3>(3 * i) = g.row(free[i]).transpose();
        }
        return val;
    };
    LbfgsOptions lo;
    lo.memory = opt.memory;
    lo.max_iterations = opt.inner_iterations;
    out.report = lbfgs(x, f, lo);
    for (size_t i = 0; i < free.size(); ++i) out.vertices.row(free[i]) = x.segment<3>(3 * i).transpose();
    return out;
}

struct ComposeReport {
    std::vector<int> collisions;  // total count at the start of every outer iteration, then the final count
    std::vector<double> losses;   // summed final penetration loss of every outer iteration
    int outer_iterations = 0;
    int residual_collisions = 0;
    bool resolved = false;
    std::vector<std::string> warnings;
};

inline Json to_json(const ComposeReport& r) {
    return {{"collisions", r.collisions},
            {"losses", r.losses},
            {"outer_iterations", r.outer_iterations},
            {"residual_collisions", r.residual_collisions},
            {"resolved", r.resolved},
            {"warnings", r.warnings}};
}

struct ComposeResult {
    BodyMesh body;
    ComposeReport report;
};

/// Detect, push and relax until no body vertex sits outside a garment shell, or the outer
/// iteration limit is hit (then the residual count is reported, not thrown).
inline ComposeResult resolve_interpenetration(const BodyMesh& parts, const ComposeOptions& opt = {}) {
    opt.validate();
    for (const auto& p : parts.parts) p.validate();
    ComposeResult out{parts, {}};
    std::map<Part, std::unique_ptr<GarmentSurface>> garments;
    for (const auto& [body, garment] : kCollisionPairs)
        if (parts.find(body) && parts.find(garment) && !garments.count(garment)) {
            require(parts.find(garment)->num_faces() > 0, "garment " + std::string(to_string(garment)) + " is empty");
            garments[garment] = std::make_unique<GarmentSurface>(*parts.find(garment));
        }
    auto detect_all = [&] {
        std::vector<CollisionReport> reports;
        for (const auto& [body, garment] : kCollisionPairs)
            if (garments.count(garment) && out.body.find(body))
                reports.push_back(detect_collisions(*out.body.find(body), *garments.at(garment), opt.band));
        return reports;
    };
    auto total = [](const std::vector<CollisionReport>& rs) {
        int n = 0;
        for (const auto& r : rs) n += r.count();
        return n;
    };
    auto reports = detect_all();
    out.report.collisions.push_back(total(reports));
    while (out.report.collisions.back() > 0 && out.report.outer_iterations < opt.max_outer) {
        double loss_sum = 0;
        for (const auto& r : reports) {
            if (r.count() == 0) continue;
            PartMesh& m = *out.body.find(r.body);
            const Points3 v_star = m.vertices;
            const auto normals = vertex_normals(m);
            Points3 start = v_star;
            std::vector<char> pinned(m.num_vertices(), 0);
            for (const auto& h : r.hits) {
                start.row(h.vertex) -= opt.push * normals.normals.row(h.vertex);
                pinned[h.vertex] = 1;
            }
            auto relaxed = relax_with_pins(m, v_star, start, pinned, opt);
            if (!relaxed.vertices.allFinite() || !std::isfinite(relaxed.report.history.back()))
                throw NumericalError("non-finite penetration loss while relaxing " + std::string(to_string(r.body)));
            if (out.report.outer_iterations == 0) {
                const PenetrationLoss probe(m, v_star, opt.weights);
                for (const auto& w : probe.warnings()) out.report.warnings.push_back(std::string(to_string(r.body)) + ": " + w);
            }
            m.vertices = std::move(relaxed.vertices);
            loss_sum += relaxed.report.history.back();
        }
        out.report.losses.push_back(loss_sum);
        ++out.report.outer_iterations;
        reports = detect_all();
        out.report.collisions.push_back(total(reports));
    }
    out.report.residual_collisions = out.report.collisions.back();
    out.report.resolved = out.report.residual_collisions == 0;
    return out;
}

}  // namespace hoop::composer
