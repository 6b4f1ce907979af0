#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hoop/core/rotation.hpp"
#include "hoop/eval/emd.hpp"
#include "hoop/eval/icp.hpp"
#include "hoop/eval/metrics.hpp"

using namespace hoop;
using namespace hoop::eval;

namespace {

Points3 random_cloud(int n, std::mt19937_64& rng, const Vec3& extent = Vec3(1.0, 0.6, 0.3)) {
    std::uniform_real_distribution<double> u(-1, 1);
    Points3 p(n, 3);
    for (int i = 0; i < n; ++i) p.row(i) = Vec3(u(rng), u(rng), u(rng)).cwiseProduct(extent).transpose();
    return p;
}

Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized().toRotationMatrix();
}

Points3 rigid(const Points3& p, const Mat3& r, const Vec3& t) { return (p * r.transpose()).rowwise() + t.transpose(); }

double brute_chamfer(const Points3& a, const Points3& b) {
    auto one = [](const Points3& x, const Points3& y) {
        double s = 0;
        for (int i = 0; i < x.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < y.rows(); ++j) best = std::min(best, (x.row(i) - y.row(j)).squaredNorm());
            s += best;
        }
        return s / x.rows();
    };
    return 1000.0 * (one(a, b) + one(b, a));
}

double brute_emd(const Points3& a, const Points3& b) {
    std::vector<int> perm(b.rows());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0;
        for (int i = 0; i < a.rows(); ++i) s += (a.row(i) - b.row(perm[i])).norm();
        best = std::min(best, s / a.rows());
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Pose3D pose_of(Points3 p) { return Pose3D{std::move(p), Frame::world}; }

}  // namespace

// ---- Procrustes ---------------------------------------------------------------

TEST(Procrustes, IdentityOnEqualSets) {
    std::mt19937_64 rng(1);
    const auto x = random_cloud(10, rng);
    const auto r = procrustes_align(x, x);
    EXPECT_NEAR(r.transform.scale, 1.0, 1e-12);
    EXPECT_LE((r.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(r.transform.translation.norm(), 1e-12);
    EXPECT_LE(r.residual, 1e-24);
    EXPECT_FALSE(r.degenerate);
}

TEST(Procrustes, RecoversAnExactSimilarity) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_cloud(8, rng);
        const Mat3 rot = random_rotation(rng);
        const double s = 0.5 + trial * 0.1;
        const Vec3 t(0.3, -1.2, 2.0);
        const Points3 y = rigid(s * x, rot, t);
        const auto r = procrustes_align(x, y, true);
        EXPECT_NEAR(r.transform.scale, s, 1e-9);
        EXPECT_LE((r.transform.rotation - rot).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((r.transform.translation - t).cwiseAbs().maxCoeff(), 1e-9);
        const auto rr = procrustes_align(x, rigid(x, rot, t), false);
        EXPECT_EQ(rr.transform.scale, 1.0);
        EXPECT_LE((rr.transform.rotation - rot).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Procrustes, BeatsRandomRigidAlignments) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto x = random_cloud(12, rng), y = random_cloud(12, rng);
        const auto r = procrustes_align(x, y, false);
        EXPECT_LE(r.residual, r.residual_before);
        const Vec3 mx = x.colwise().mean().transpose(), my = y.colwise().mean().transpose();
        for (int k = 0; k < 100; ++k) {
            const Mat3 rot = random_rotation(rng);
            EXPECT_LE(r.residual, sum_squared_distance(rigid(x, rot, my - rot * mx), y) + 1e-12);
        }
        EXPECT_LE(procrustes_align(x, y, true).residual, r.residual + 1e-12);
    }
}

TEST(Procrustes, ReflectionGuardAndDegenerateInputs) {
    std::mt19937_64 rng(4);
    const auto x = random_cloud(9, rng);
    Points3 mirrored = x;
    mirrored.col(0) *= -1;
    const auto r = procrustes_align(x, mirrored);
    EXPECT_NEAR(r.transform.rotation.determinant(), 1.0, 1e-12);
    EXPECT_LE(r.residual, r.residual_before);

    Points3 line(4, 3);
    line << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
    const auto d = procrustes_align(line, line.rowwise() + Eigen::RowVector3d(0, 1, 0));
    EXPECT_TRUE(d.degenerate);
    EXPECT_LE(d.residual, 1e-20);

    const Points3 same = Points3::Constant(3, 3, 0.5);
    const auto c = procrustes_align(same, same.array() + 1.0);
    EXPECT_TRUE(c.degenerate);
    EXPECT_LE(c.residual, 1e-24);

    EXPECT_THROW(procrustes_align(line.topRows(2), line.topRows(2)), ValidationError);
    EXPECT_THROW(procrustes_align(line, line.topRows(3)), ValidationError);
}

// ---- MPJPE / MPVPE ------------------------------------------------------------

TEST(Mpjpe, SubsetFileMatchesBuiltIn) {
    const auto skel = canonical_skeleton();
    EXPECT_EQ(load_joint_subset(std::string(HOOP_DATA_DIR) + "/lsp14.json", skel), lsp14_indices(skel));
    EXPECT_EQ(lsp14_indices().size(), 14u);
}

TEST(Mpjpe, ZeroOffsetAndProcrustes) {
    std::mt19937_64 rng(5);
    const auto gt = pose_of(random_cloud(kNumJoints, rng));
    const auto lsp = lsp14_indices();
    EXPECT_EQ(mpjpe(gt, gt, lsp, false), 0.0);
    const auto shifted = pose_of(gt.positions.rowwise() + Eigen::RowVector3d(0.01, 0, 0));
    EXPECT_NEAR(mpjpe(shifted, gt, lsp, false), 10.0, 1e-9);
    EXPECT_NEAR(mpjpe(shifted, gt, lsp, true), 0.0, 1e-9);
    const auto scaled = pose_of(gt.positions * 1.3);
    EXPECT_NEAR(mpjpe(scaled, gt, lsp, true), 0.0, 1e-9);
}

TEST(Mpjpe, MatchesPerJointLoop) {
    std::mt19937_64 rng(6);
    const auto lsp = lsp14_indices();
    for (int t = 0; t < 10; ++t) {
        const auto a = pose_of(random_cloud(kNumJoints, rng)), b = pose_of(random_cloud(kNumJoints, rng));
        double s = 0;
        for (int j : lsp) s += (a.joint(j) - b.joint(j)).norm();
        EXPECT_NEAR(mpjpe(a, b, lsp, false), 1000.0 * s / lsp.size(), 1e-12 * s * 1000);
        EXPECT_LE(mpjpe(a, b, lsp, true), mpjpe(a, b, lsp, false) * (1 + 1e-12) + 1e-9);
    }
}

TEST(Mpjpe, RigidInvariance) {
    std::mt19937_64 rng(7);
    const auto a = random_cloud(kNumJoints, rng), b = random_cloud(kNumJoints, rng);
    const Mat3 rot = random_rotation(rng);
    const Vec3 t(3, -2, 5);
    const auto lsp = lsp14_indices();
    for (bool pa : {false, true}) {
        const double base = mpjpe(pose_of(a), pose_of(b), lsp, pa);
        EXPECT_NEAR(mpjpe(pose_of(rigid(a, rot, t)), pose_of(rigid(b, rot, t)), lsp, pa), base, 1e-9 * base);
    }
}

TEST(Mpjpe, MissingJointsAreErrors) {
    std::mt19937_64 rng(8);
    const auto full = pose_of(random_cloud(kNumJoints, rng)), partial = pose_of(random_cloud(20, rng));
    EXPECT_THROW(mpjpe(partial, full, lsp14_indices(), false), ValidationError);
    EXPECT_THROW(mpjpe(full, partial, lsp14_indices(), false), ValidationError);
    EXPECT_THROW(mpjpe(full, full, {}, false), ValidationError);
}

TEST(Mpvpe, ZeroOffsetLoopAndMismatch) {
    std::mt19937_64 rng(9);
    const auto a = random_cloud(50, rng), b = random_cloud(50, rng);
    EXPECT_EQ(mpvpe(a, a, false), 0.0);
    EXPECT_NEAR(mpvpe(a.rowwise() + Eigen::RowVector3d(0, 0, 0.01), a, false), 10.0, 1e-9);
    EXPECT_NEAR(mpvpe(a.rowwise() + Eigen::RowVector3d(0, 0, 0.01), a, true), 0.0, 1e-9);
    double s = 0;
    for (int i = 0; i < 50; ++i) s += (a.row(i) - b.row(i)).norm();
    EXPECT_NEAR(mpvpe(a, b, false), 1000.0 * s / 50, 1e-9);
    EXPECT_THROW(mpvpe(a, b.topRows(49), false), ValidationError);
}

// ---- Chamfer ------------------------------------------------------------------

TEST(KdTree, NearestMatchesBruteForce) {
    std::mt19937_64 rng(10);
    Points3 pts = random_cloud(300, rng);
    pts.row(17) = pts.row(3);  // a duplicate: the lower index must win
    const KdTree tree(pts);
    const auto queries = random_cloud(200, rng, Vec3(1.2, 0.8, 0.5));
    for (int q = 0; q < queries.rows(); ++q) {
        int best = 0;
        for (int i = 1; i < pts.rows(); ++i)
            if ((pts.row(i) - queries.row(q)).squaredNorm() < (pts.row(best) - queries.row(q)).squaredNorm()) best = i;
        const auto h = tree.nearest(queries.row(q).transpose());
        EXPECT_EQ(h.index, best);
        EXPECT_EQ(h.dist2, (pts.row(best) - queries.row(q)).squaredNorm());
    }
    EXPECT_EQ(tree.nearest(pts.row(17).transpose()).index, 3);
}

TEST(Chamfer, HandCasesAndBruteForce) {
    Points3 o(1, 3), p(1, 3);
    o << 0, 0, 0;
    p << 0.1, 0, 0;
    EXPECT_NEAR(chamfer(o, p), 20.0, 1e-12);
    std::mt19937_64 rng(11);
    for (int t = 0; t < 5; ++t) {
        const auto a = random_cloud(150 + 10 * t, rng), b = random_cloud(200, rng);
        EXPECT_EQ(chamfer(a, a), 0.0);
        EXPECT_NEAR(chamfer(a, b), brute_chamfer(a, b), 1e-9);
        EXPECT_NEAR(chamfer(a, b), chamfer(b, a), 1e-12);
        const Mat3 rot = random_rotation(rng);
        const double base = chamfer(a, b);
        EXPECT_NEAR(chamfer(rigid(a, rot, Vec3(1, 2, 3)), rigid(b, rot, Vec3(1, 2, 3))), base, 1e-9 * base);
    }
    EXPECT_THROW(chamfer(Points3(0, 3), o), ValidationError);
}

// ---- EMD ----------------------------------------------------------------------

TEST(Emd, ZeroPermutationAndBruteForce) {
    std::mt19937_64 rng(12);
    const auto a = random_cloud(40, rng);
    EXPECT_EQ(emd(a, a), 0.0);
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Points3 shuffled(40, 3);
    for (int i = 0; i < 40; ++i) shuffled.row(i) = a.row(perm[i]);
    EXPECT_NEAR(emd(a, shuffled), 0.0, 1e-15);
    for (int n = 2; n <= 8; ++n) {
        const auto x = random_cloud(n, rng), y = random_cloud(n, rng);
        EXPECT_NEAR(emd(x, y), brute_emd(x, y), 1e-12) << n;
        EXPECT_NEAR(emd(x, y), emd(y, x), 1e-12);
    }
}

TEST(Emd, UnequalSizesMatchEveryPointOfTheSmallerSet) {
    std::mt19937_64 rng(13);
    const auto small = random_cloud(4, rng), big = random_cloud(7, rng);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> cols(7);
    std::iota(cols.begin(), cols.end(), 0);
    do {
        double s = 0;
        for (int i = 0; i < 4; ++i) s += (small.row(i) - big.row(cols[i])).norm();
        best = std::min(best, s / 4);
    } while (std::next_permutation(cols.begin(), cols.end()));
    EXPECT_NEAR(emd(small, big), best, 1e-12);
    EXPECT_NEAR(emd(big, small), best, 1e-12);
}

TEST(Emd, FarthestPointSamplingAndInvariance) {
    std::mt19937_64 rng(14);
    const auto a = random_cloud(600, rng), b = random_cloud(700, rng);
    const auto s1 = farthest_point_sample(a, 64), s2 = farthest_point_sample(a, 64);
    EXPECT_EQ(s1, s2);
    EXPECT_EQ(s1.row(0), a.row(0));
    EXPECT_EQ(farthest_point_sample(a.topRows(10), 64), a.topRows(10));
    // each pick is the point farthest from those already chosen
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 64; ++k) {
        double d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) d = std::min(d, (s1.row(k) - s1.row(j)).norm());
        EXPECT_LE(d, prev + 1e-15);
        prev = d;
    }
    const double base = emd(a, b, 64);
    const Mat3 rot = random_rotation(rng);
    EXPECT_NEAR(emd(rigid(a, rot, Vec3(-1, 0, 4)), rigid(b, rot, Vec3(-1, 0, 4)), 64), base, 1e-9 * base);
    EXPECT_THROW(emd(Points3(0, 3), b), ValidationError);
    EXPECT_THROW(farthest_point_sample(a, 0), ValidationError);
}

// ---- ICP ----------------------------------------------------------------------

TEST(Icp, IdentityOnEqualClouds) {
    std::mt19937_64 rng(15);
    const auto a = random_cloud(200, rng);
    const auto r = icp(a, a);
    EXPECT_LE((r.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(r.translation.norm(), 1e-12);
    EXPECT_EQ(r.residuals.front(), 0.0);
    EXPECT_TRUE(r.converged);
}

TEST(Icp, RecoversASmallRigidMotionMonotonically) {
    std::mt19937_64 rng(16);
    const auto a = random_cloud(400, rng);
    const Mat3 rot = exp_so3(Vec3(0.2, 1.0, 0.3).normalized() * (8.0 * std::numbers::pi / 180.0));
    const Vec3 t(0.05, -0.02, 0.03);
    const auto r = icp(a, rigid(a, rot, t));
    EXPECT_LE((r.rotation - rot).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_LE((r.translation - t).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_TRUE(r.converged);
    for (size_t i = 1; i < r.residuals.size(); ++i) EXPECT_LE(r.residuals[i], r.residuals[i - 1]);
    EXPECT_THROW(icp(Points3(0, 3), a), ValidationError);
}
