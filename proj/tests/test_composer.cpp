#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hoop/composer/compose.hpp"
#include "hoop/core/primitives.hpp"

using namespace hoop;
using namespace hoop::composer;

namespace {

NearestHit brute_nearest(const PartMesh& m, const Vec3& p) {
    NearestHit best;
    for (int f = 0; f < m.num_faces(); ++f) {
        const auto h = nearest_on_face(m, f, p);
        if (h.dist2 < best.dist2) best = h;  // strict: the first minimum keeps the lowest index
    }
    return best;
}

/// Arm capsule inside an open sleeve, lifted so its top protrudes `protrusion` meters.
BodyMesh sleeve_scene(double protrusion) {
    const double r_sleeve = 0.06, r_arm = 0.05;
    PartMesh sleeve = open_cylinder(Vec3(0, 0, 0), Vec3(0.4, 0, 0), r_sleeve, 32, 16, Part::shirt);
    const double lift = r_sleeve + protrusion - r_arm;
    PartMesh arm = capsule(Vec3(0.09, lift, 0), Vec3(0.31, lift, 0), r_arm, 24, 12, 5, Part::arms);
    return BodyMesh{{arm, sleeve}};
}

std::set<int> flagged(const BodyMesh& body) {
    const auto r = detect_collisions(*body.find(Part::arms), *body.find(Part::shirt));
    const auto v = r.vertices();
    return {v.begin(), v.end()};
}

}  // namespace

TEST(Bvh, MatchesBruteForceExactly) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& m : {uv_sphere(1.0, 24, 32), capsule(Vec3(0, 0, 0), Vec3(0, 1, 0), 0.3, 20, 10, 6),
                          planar_grid(30, 30, 0.05)}) {
        ASSERT_LE(m.num_faces(), 5000);
        const TriangleBvh bvh(m);
        for (int i = 0; i < 400; ++i) {
            const Vec3 p(u(rng), u(rng), u(rng));
            const auto a = bvh.nearest(p), b = brute_nearest(m, p);
            EXPECT_EQ(a.face, b.face);
            EXPECT_EQ(a.dist2, b.dist2);
            EXPECT_EQ(a.point, b.point);
        }
        // queries at mesh vertices hit several faces at distance zero; the lowest index wins
        for (int v = 0; v < m.num_vertices(); v += 7) EXPECT_EQ(bvh.nearest(m.vertex(v)).face, brute_nearest(m, m.vertex(v)).face);
    }
}

TEST(Collision, ConcentricSpheres) {
    const auto garment = uv_sphere(1.0, 24, 32, Vec3::Zero(), Part::shirt);
    const GarmentSurface g(garment);
    EXPECT_EQ(detect_collisions(uv_sphere(0.8, 16, 20, Vec3::Zero(), Part::arms), g).count(), 0);
    EXPECT_EQ(detect_collisions(uv_sphere(1.2, 16, 20, Vec3::Zero(), Part::arms), g).count(), 0);
    for (const auto& body : {uv_sphere(1.03, 24, 32, Vec3::Zero(), Part::arms), uv_sphere(1.03, 15, 21, Vec3::Zero(), Part::arms)}) {
        const auto r = detect_collisions(body, g);
        EXPECT_EQ(r.count(), body.num_vertices());
        for (const auto& h : r.hits) {
            EXPECT_GT(h.normal.dot(body.vertex(h.vertex)), 0.0);
            EXPECT_LT(h.distance, 0.05);
        }
    }
    // a smaller band excludes the 3 cm shell
    EXPECT_EQ(detect_collisions(uv_sphere(1.03, 15, 21, Vec3::Zero(), Part::arms), g, 0.02).count(), 0);
}

TEST(Collision, FlagsMatchBruteForceClassification) {
    const auto scene = sleeve_scene(0.005);
    const auto& arm = *scene.find(Part::arms);
    const GarmentSurface g(*scene.find(Part::shirt));
    const auto r = detect_collisions(arm, g);
    std::set<int> oracle;
    for (int v = 0; v < arm.num_vertices(); ++v)
        if (is_collision(arm.vertex(v), g.classify(brute_nearest(g.mesh(), arm.vertex(v))), kDefaultBand)) oracle.insert(v);
    const auto got = r.vertices();
    EXPECT_EQ(std::set<int>(got.begin(), got.end()), oracle);
    EXPECT_GT(r.count(), 0);
    for (int v : got) EXPECT_GT(arm.vertex(v).y(), 0.0);  // only the lifted top pokes out
}

TEST(Collision, OpenRimsAreNotCollisions) {
    const auto sleeve = open_cylinder(Vec3(0, 0, 0), Vec3(0.4, 0, 0), 0.06, 32, 8, Part::shirt);
    PartMesh hand;
    hand.part = Part::arms;
    hand.vertices.resize(2, 3);
    hand.vertices << 0.42, 0.0, 0.0,  // beyond the cuff, nearest point on the rim
        0.2, 0.07, 0.0;                // just outside the side wall
    const auto r = detect_collisions(hand, sleeve);
    ASSERT_EQ(r.count(), 1);
    EXPECT_EQ(r.hits[0].vertex, 1);
    EXPECT_NEAR(r.hits[0].normal.y(), 1.0, 0.05);
}

TEST(Collision, EmptyGarmentIsAnError) {
    PartMesh empty;
    empty.vertices.resize(0, 3);
    empty.faces.resize(0, 3);
    EXPECT_THROW(detect_collisions(uv_sphere(1, 4, 6), empty), ValidationError);
    EXPECT_THROW(detect_collisions(uv_sphere(1, 4, 6), GarmentSurface(uv_sphere(1, 4, 6)), 0.0), ValidationError);
}

// ---- penetration loss ---------------------------------------------------------

TEST(Penetration, ZeroAtReference) {
    const auto m = capsule(Vec3(0, 0, 0), Vec3(0, 0.3, 0), 0.05, 10, 6, 3);
    const PenetrationLoss loss(m, m.vertices);
    Points3 g;
    EXPECT_EQ(loss(m.vertices, &g), 0.0);
    EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(loss.warnings().empty());
}

TEST(Penetration, GradientMatchesCentralDifferences) {
    const auto m = capsule(Vec3(0, 0, 0), Vec3(0, 0.3, 0), 0.05, 8, 4, 2);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.004);
    Points3 v = m.vertices;
    for (auto& e : v.reshaped()) e += n(rng);
    const PenetrationLoss loss(m, m.vertices, {1.0, 0.1, 0.1});
    Points3 g;
    loss(v, &g);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        Points3 a = v, b = v;
        a.reshaped()(i) += h;
        b.reshaped()(i) -= h;
        const double num = (loss(a) - loss(b)) / (2 * h);
        const double ana = g.reshaped()(i);
        EXPECT_LE(std::abs(num - ana) / std::max(1.0, std::abs(ana)), 1e-4) << i;
    }
}

TEST(Penetration, UniformScaleCostsEpsilonPerEdge) {
    const auto m = planar_grid(5, 5, 0.02);
    const double eps = 1e-3;
    const PenetrationLoss edge_only(m, m.vertices, {0, 0, 1});
    const Points3 scaled = m.vertices * (1 + eps);
    EXPECT_NEAR(edge_only(scaled) / edge_only.num_edges(), eps, 1e-12);
    EXPECT_EQ(edge_only.num_edges(), static_cast<int>(unique_edges(m.faces).size()));
}

TEST(Penetration, ZeroLengthRestEdgesAreExcludedWithAWarning) {
    const auto m = planar_grid(3, 3, 0.1);
    Points3 star = m.vertices;
    star.row(1) = star.row(0);
    const PenetrationLoss loss(m, star);
    EXPECT_EQ(loss.num_edges(), static_cast<int>(unique_edges(m.faces).size()) - 1);
    ASSERT_EQ(loss.warnings().size(), 1u);
    EXPECT_NE(loss.warnings()[0].find("0-1"), std::string::npos);
    EXPECT_TRUE(std::isfinite(loss(m.vertices)));
}

// ---- optimizer ----------------------------------------------------------------

TEST(Lbfgs, MinimizesRosenbrockMonotonically) {
    Eigen::VectorXd x(2);
    x << -1.2, 1.0;
    auto f = [](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
        const double a = 1 - p[0], b = p[1] - p[0] * p[0];
        if (g) {
            g->resize(2);
            (*g)[0] = -2 * a - 400 * p[0] * b;
            (*g)[1] = 200 * b;
        }
        return a * a + 100 * b * b;
    };
    LbfgsOptions opt;
    opt.max_iterations = 200;
    const auto rep = lbfgs(x, f, opt);
    EXPECT_NEAR(x[0], 1.0, 1e-5);
    EXPECT_NEAR(x[1], 1.0, 1e-5);
    for (size_t i = 1; i < rep.history.size(); ++i) EXPECT_LT(rep.history[i], rep.history[i - 1]);
    Eigen::VectorXd bad(1);
    bad << 0;
    EXPECT_THROW(lbfgs(bad, [](const Eigen::VectorXd&, Eigen::VectorXd* g) {
        if (g) g->setZero(1);
        return std::nan("");
    }), NumericalError);
}

TEST(Relax, PinnedVerticesAreBitIdenticalAndLossNeverIncreases) {
    const auto m = capsule(Vec3(0, 0, 0), Vec3(0, 0.3, 0), 0.05, 12, 6, 3);
    const auto normals = vertex_normals(m);
    Points3 start = m.vertices;
    std::vector<char> pinned(m.num_vertices(), 0);
    for (int v = 0; v < m.num_vertices(); ++v)
        if (m.vertices(v, 0) > 0.03) {
            pinned[v] = 1;
            start.row(v) -= 0.01 * normals.normals.row(v);
        }
    const auto r = relax_with_pins(m, m.vertices, start, pinned);
    EXPECT_GT(r.report.iterations, 0);
    for (int v = 0; v < m.num_vertices(); ++v)
        if (pinned[v]) {
            for (int k = 0; k < 3; ++k) EXPECT_EQ(r.vertices(v, k), start(v, k));
        }
    for (size_t i = 1; i < r.report.history.size(); ++i) EXPECT_LE(r.report.history[i], r.report.history[i - 1]);
    EXPECT_LT(r.report.history.back(), r.report.history.front());
}

// ---- full loop ----------------------------------------------------------------

TEST(Resolve, NoCollisionsLeavesTheInputUntouched) {
    const auto scene = sleeve_scene(-0.005);
    ASSERT_TRUE(flagged(scene).empty());
    const auto out = resolve_interpenetration(scene);
    EXPECT_EQ(out.report.outer_iterations, 0);
    EXPECT_TRUE(out.report.resolved);
    EXPECT_EQ(out.report.collisions, std::vector<int>{0});
    for (size_t p = 0; p < scene.parts.size(); ++p) EXPECT_EQ(out.body.parts[p].vertices, scene.parts[p].vertices);
}

TEST(Resolve, ArmPokingThroughASleeveIsPulledInside) {
    const auto scene = sleeve_scene(0.005);
    const auto initial = flagged(scene);
    ASSERT_FALSE(initial.empty());
    const auto out = resolve_interpenetration(scene);
    EXPECT_TRUE(out.report.resolved);
    EXPECT_LE(out.report.outer_iterations, 3);
    EXPECT_EQ(out.report.residual_collisions, 0);
    for (size_t i = 1; i < out.report.collisions.size(); ++i)
        EXPECT_LE(out.report.collisions[i], out.report.collisions[i - 1]);
    EXPECT_EQ(out.body.find(Part::shirt)->vertices, scene.find(Part::shirt)->vertices);

    // edges away from the collision region keep their length
    const auto& before = *scene.find(Part::arms);
    const auto& after = *out.body.find(Part::arms);
    double change = 0;
    int n = 0;
    for (const auto& e : unique_edges(before.faces)) {
        if (initial.count(e[0]) || initial.count(e[1])) continue;
        const double l0 = (before.vertices.row(e[0]) - before.vertices.row(e[1])).norm();
        const double l1 = (after.vertices.row(e[0]) - after.vertices.row(e[1])).norm();
        change += std::abs(l1 / l0 - 1);
        ++n;
    }
    ASSERT_GT(n, 0);
    EXPECT_LT(change / n, 0.01);

    const auto j = to_json(out.report);
    EXPECT_EQ(j.at("residual_collisions").get<int>(), 0);
    EXPECT_EQ(j.at("collisions").size(), out.report.collisions.size());
}

TEST(Resolve, OuterLimitReportsResidualInsteadOfThrowing) {
    ComposeOptions opt;
    opt.max_outer = 0;
    const auto out = resolve_interpenetration(sleeve_scene(0.005), opt);
    EXPECT_FALSE(out.report.resolved);
    EXPECT_GT(out.report.residual_collisions, 0);
}
