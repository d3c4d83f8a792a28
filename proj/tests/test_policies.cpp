#include <glb/policies.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using glb::ArmSet;
using glb::Ellipsoid;
using glb::Mat;
using glb::Vec;

namespace {

Vec random_unit(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = n01(rng);
    return v / v.norm();
}

Ellipsoid make_ellipsoid(const Vec& c, const Mat& V, double beta)
{
    return {c, V, V.inverse(), beta};
}

Mat basis_arms(int d)
{
    return Mat::Identity(d, d);
}

// Vbar = lambda I + sum of n outer products of vectors with norm <= 1.
Mat random_gram(int d, int n, double lambda, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat V = lambda * Mat::Identity(d, d);
    for (int i = 0; i < n; ++i) {
        const Vec x = random_unit(d, rng) * u(rng);
        V += x * x.transpose();
    }
    return V;
}

ArmSet random_arms(int n, int d, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.1, 1.0);
    Mat X(n, d);
    for (int i = 0; i < n; ++i) X.row(i) = (random_unit(d, rng) * u(rng)).transpose();
    return ArmSet(X);
}

}  // namespace

TEST(ArmSetTest, ValidatesNormsAndComputesR)
{
    Mat X(2, 2);
    X << 0.5, 0.0, 0.0, 1.0;
    EXPECT_DOUBLE_EQ(ArmSet(X).r(), 0.5);
    X(1, 1) = 1.1;
    EXPECT_THROW(ArmSet{X}, std::invalid_argument);
    EXPECT_THROW(ArmSet{Mat::Zero(2, 2)}, std::invalid_argument);
    EXPECT_THROW(ArmSet{Mat(0, 2)}, std::invalid_argument);
}

TEST(GlocSelect, ZeroRadiusIsGreedy)
{
    const Ellipsoid e = make_ellipsoid(Vec::Unit(2, 0), Mat::Identity(2, 2), 0.0);
    EXPECT_EQ(glb::gloc_select(e, ArmSet(basis_arms(2))), 0);
}

TEST(GlocSelect, HandExample)
{
    Mat V = Mat::Identity(2, 2);
    V(0, 0) = 100.0;
    const Ellipsoid e = make_ellipsoid(Vec::Unit(2, 0), V, 4.0);
    const Vec s = glb::gloc_scores(e, ArmSet(basis_arms(2)));
    EXPECT_NEAR(s(0), 1.2, 1e-12);
    EXPECT_NEAR(s(1), 2.0, 1e-12);
    EXPECT_EQ(glb::gloc_select(e, ArmSet(basis_arms(2))), 1);
}

TEST(GlocSelect, TiesGoToLowestIndex)
{
    Mat X(3, 2);
    X << 0.0, 1.0, 1.0, 0.0, 1.0, 0.0;
    const Ellipsoid e = make_ellipsoid(Vec::Unit(2, 0), Mat::Identity(2, 2), 0.0);
    EXPECT_EQ(glb::gloc_select(e, ArmSet(X)), 1);
}

TEST(GlocSelect, MatchesBoundaryMaximisation)
{
    // max over arms and theta in the ellipsoid of <x, theta>, with theta sampled on the boundary
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> ub(0.1, 4.0);
    for (int inst = 0; inst < 100; ++inst) {
        const int d = 2;
        const Mat V = random_gram(d, 5, 1.0, rng);
        const Vec c = random_unit(d, rng) * 0.5;
        const double beta = ub(rng);
        const Ellipsoid e = make_ellipsoid(c, V, beta);
        const ArmSet arms = random_arms(6, d, rng);
        const Vec scores = glb::gloc_scores(e, arms);
        const double lib = scores.maxCoeff();

        const Mat root = glb::linalg::inverse_sqrt(V);
        double oracle = -1e300;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const double a = 2.0 * M_PI * i / n;
            Vec u(2);
            u << std::cos(a), std::sin(a);
            const Vec theta = c + std::sqrt(beta) * root * u;
            ASSERT_NEAR(e.distance_sq(theta), beta, 1e-9 * beta);
            oracle = std::max(oracle, (arms.matrix() * theta).maxCoeff());
        }
        EXPECT_LE(oracle, lib + 1e-10);
        EXPECT_GE(oracle, lib - 1e-6);
    }
}

TEST(GlocProperty, JointRescalingLeavesScoresUnchanged)
{
    std::mt19937_64 rng(43);
    for (int i = 0; i < 100; ++i) {
        const Mat V = random_gram(3, 10, 1.0, rng);
        const Ellipsoid e = make_ellipsoid(random_unit(3, rng), V, 2.5);
        const double s = 0.37 + i * 0.05;
        const Ellipsoid e2 = make_ellipsoid(e.center, V * s, 2.5 * s);
        const ArmSet arms = random_arms(20, 3, rng);
        EXPECT_LE((glb::gloc_scores(e, arms) - glb::gloc_scores(e2, arms)).norm(), 1e-10);
        EXPECT_EQ(glb::gloc_select(e, arms), glb::gloc_select(e2, arms));
    }
}

TEST(GlocTs, ZeroNoiseIsGreedy)
{
    std::mt19937_64 rng(47);
    const Ellipsoid e = make_ellipsoid(random_unit(3, rng), random_gram(3, 4, 1.0, rng), 9.0);
    const ArmSet arms = random_arms(30, 3, rng);
    const glb::TsDraw d = glb::gloc_ts_select(e, arms, Vec::Zero(3));
    EXPECT_EQ(d.index, glb::argmax_first(arms.matrix() * e.center));
    EXPECT_EQ(d.theta_dot, e.center);
}

TEST(GlocTs, SampleCovarianceIsBetaIdentity)
{
    std::mt19937_64 rng(53);
    const int d = 3;
    const double beta = 2.0;
    const Vec c = Vec::Constant(d, 0.1);
    const Ellipsoid e = make_ellipsoid(c, Mat::Identity(d, d), beta);
    const ArmSet arms(basis_arms(d));
    const int n = 100000;
    Mat acc = Mat::Zero(d, d);
    Vec mean = Vec::Zero(d);
    std::vector<Vec> draws;
    draws.reserve(n);
    for (int i = 0; i < n; ++i) {
        draws.push_back(glb::gloc_ts_select(e, arms, rng).theta_dot);
        mean += draws.back();
    }
    mean /= n;
    for (const auto& v : draws) acc += (v - mean) * (v - mean).transpose();
    acc /= (n - 1);
    const Mat target = beta * Mat::Identity(d, d);
    EXPECT_LE((acc - target).norm() / target.norm(), 0.02);
}

TEST(GlocTs, ArmScalingInvariance)
{
    std::mt19937_64 rng(59);
    const Ellipsoid e = make_ellipsoid(random_unit(4, rng), random_gram(4, 6, 1.0, rng), 3.0);
    const ArmSet arms = random_arms(25, 4, rng);
    const ArmSet half(arms.matrix() * 0.5);
    for (int i = 0; i < 50; ++i) {
        const Vec xi = glb::standard_normal_vector(4, rng);
        EXPECT_EQ(glb::gloc_ts_select(e, arms, xi).index, glb::gloc_ts_select(e, half, xi).index);
    }
}

TEST(GlocTs, SameSeedReproduces)
{
    std::mt19937_64 r0(61);
    const Ellipsoid e = make_ellipsoid(random_unit(4, r0), random_gram(4, 6, 1.0, r0), 3.0);
    const ArmSet arms = random_arms(25, 4, r0);
    std::mt19937_64 a(5), b(5);
    for (int i = 0; i < 100; ++i) {
        const auto x = glb::gloc_ts_select(e, arms, a);
        const auto y = glb::gloc_ts_select(e, arms, b);
        EXPECT_EQ(x.index, y.index);
        EXPECT_EQ(x.theta_dot, y.theta_dot);
    }
}

TEST(MBar, IsotropicEig)
{
    EXPECT_NEAR(glb::m_bar_eig(0.5 * Mat::Identity(3, 3), 0.5), 0.5 * std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(glb::m_bar_eig(0.5 * Mat::Identity(3, 3), 0.5), 0.35355339059327373, 1e-15);
}

TEST(MBar, BoundMode)
{
    EXPECT_DOUBLE_EQ(glb::m_bar_bound(0.5, 3.0, 1.0), 0.25);
}

TEST(MBar, EigDominatesBound)
{
    std::mt19937_64 rng(67);
    std::uniform_int_distribution<int> steps(0, 40);
    std::uniform_real_distribution<double> ur(0.05, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const int t = steps(rng) + 1;  // round being decided; t-1 observations so far
        const double lambda = 1.0;
        const Mat V = random_gram(4, t - 1, lambda, rng);
        const double r = ur(rng);
        EXPECT_GE(glb::m_bar_eig(V.inverse(), r), glb::m_bar_bound(r, t, lambda) - 1e-12);
    }
}

TEST(MBar, GreedyModeUsesGreedyArm)
{
    Mat V = Mat::Identity(2, 2);
    V(1, 1) = 4.0;
    const Ellipsoid e = make_ellipsoid(Vec::Unit(2, 1), V, 1.0);
    const ArmSet arms(basis_arms(2));
    EXPECT_NEAR(glb::m_bar(e, arms, glb::MbarMode::greedy, 1.0, 1.0), 0.5, 1e-15);
}

TEST(QglocSelect, HandExample)
{
    const Ellipsoid e = make_ellipsoid(Vec::Unit(2, 0), Mat::Identity(2, 2), 1.0);
    const ArmSet arms(basis_arms(2));
    const Vec s = glb::qgloc_scores(e, arms, 1.0, 1.0);
    EXPECT_NEAR(s(0), 1.25, 1e-15);
    EXPECT_NEAR(s(1), 0.25, 1e-15);
    EXPECT_EQ(glb::qgloc_select(e, arms, 1.0, 1.0), 0);
}

TEST(QglocSelect, ZeroRadiusIsGreedy)
{
    std::mt19937_64 rng(71);
    const Ellipsoid e = make_ellipsoid(random_unit(3, rng), random_gram(3, 5, 1.0, rng), 0.0);
    const ArmSet arms = random_arms(40, 3, rng);
    EXPECT_EQ(glb::qgloc_select(e, arms, 0.7, 0.2), glb::argmax_first(arms.matrix() * e.center));
}

TEST(QglocSelect, DefaultC0)
{
    const auto fc = glb::GlmFamily(glb::FamilyKind::logit, 1.0).constants();
    EXPECT_NEAR(glb::default_c0(fc), std::pow((fc.L + fc.R) / fc.kappa, -0.5), 1e-15);
    EXPECT_THROW(glb::qgloc_coef(1.0, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(glb::qgloc_coef(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(QglocQuery, OneDimensionalExample)
{
    Mat V(1, 1);
    V << 2.0;
    const Ellipsoid e = make_ellipsoid(Vec::Constant(1, 2.0), V, 16.0);
    const Vec flat = glb::qgloc_query(e, 1.0, 1.0).as_flat();
    ASSERT_EQ(flat.size(), 2);
    EXPECT_NEAR(flat(0), 2.0, 1e-15);
    EXPECT_NEAR(flat(1), 0.25, 1e-15);  // 16^{1/4} / 4 * 0.5
}

TEST(QglocQuery, FlatInnerProductMatchesScore)
{
    std::mt19937_64 rng(73);
    const int d = 4;
    const Ellipsoid e = make_ellipsoid(random_unit(d, rng), random_gram(d, 8, 1.0, rng), 3.3);
    const glb::QglocQuery q = glb::qgloc_query(e, 0.8, 0.3);
    EXPECT_LE((q.q_quad - q.q_quad.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const Vec flat = q.as_flat();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double coef = glb::qgloc_coef(3.3, 0.8, 0.3);
    for (int i = 0; i < 10000; ++i) {
        const Vec x = random_unit(d, rng) * u(rng);
        const double score = x.dot(e.center) + coef * x.dot(e.shape_inv * x);
        EXPECT_NEAR(flat.dot(glb::phi_map(x)), score, 1e-10);
        EXPECT_NEAR(q.structured_dot(x), score, 1e-10);
    }
}

TEST(PhiMap, Examples)
{
    Vec x(2);
    x << 1.0, 2.0;
    Vec expected(6);
    expected << 1, 2, 1, 2, 2, 4;
    EXPECT_EQ(glb::phi_map(x), expected);
    EXPECT_EQ(glb::phi_map(Vec::Zero(3)), Vec::Zero(12));
}

TEST(PhiMap, NormIdentity)
{
    std::mt19937_64 rng(79);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vec x(5);
        for (int j = 0; j < 5; ++j) x(j) = n01(rng);
        const double n2 = x.squaredNorm();
        EXPECT_NEAR(glb::phi_map(x).squaredNorm(), n2 + n2 * n2, 1e-10 * (1.0 + n2 * n2));
    }
}

TEST(Sandwich, IsotropicHolds)
{
    const Ellipsoid e = make_ellipsoid(Vec::Unit(3, 0) * 0.3, 2.0 * Mat::Identity(3, 3), 5.0);
    std::mt19937_64 rng(83);
    EXPECT_TRUE(glb::gloc_qgloc_sandwich_check(e, random_arms(50, 3, rng), 1.0, 0.4));
}

TEST(Sandwich, RandomInstancesHold)
{
    std::mt19937_64 rng(89);
    std::uniform_real_distribution<double> ub(0.0, 50.0);
    std::uniform_real_distribution<double> uc(0.05, 3.0);
    std::uniform_int_distribution<int> un(0, 60);
    for (int i = 0; i < 10000; ++i) {
        const int d = 1 + i % 5;
        const Ellipsoid e = make_ellipsoid(random_unit(d, rng), random_gram(d, un(rng), 1.0, rng), ub(rng));
        const ArmSet arms = random_arms(5, d, rng);
        const double mb = glb::m_bar_eig(e.shape_inv, arms.r());
        ASSERT_TRUE(glb::gloc_qgloc_sandwich_check(e, arms, uc(rng), mb)) << "instance " << i;
    }
}

TEST(Sandwich, NegatedSlackFails)
{
    const Ellipsoid e = make_ellipsoid(Vec::Zero(2), Mat::Identity(2, 2), 4.0);
    const ArmSet arms(basis_arms(2));
    EXPECT_GT(glb::sandwich_violations(e, arms, 1.0, 1.0, -1.0), 0);
}

TEST(UcbGlm, GaussianMleIsLeastSquares)
{
    std::mt19937_64 rng(97);
    std::normal_distribution<double> n01(0.0, 1.0);
    const int d = 4, n = 60;
    glb::UcbGlm learner(d, glb::GlmFamily(glb::FamilyKind::gaussian, 1.0));
    Mat X(n, d);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        const Vec x = random_unit(d, rng);
        X.row(i) = x.transpose();
        y(i) = n01(rng);
        learner.add(x, y(i));
    }
    const Mat G = X.transpose() * X + glb::UcbGlm::kRidge * Mat::Identity(d, d);
    const Vec ls = G.ldlt().solve(X.transpose() * y);
    EXPECT_LE((learner.fit() - ls).norm(), 1e-6);
}

TEST(UcbGlm, ZeroAlphaIsGreedyOnMle)
{
    std::mt19937_64 rng(101);
    const glb::GlmFamily fam(glb::FamilyKind::logit, 1.0);
    std::vector<std::pair<Vec, double>> hist;
    for (int i = 0; i < 40; ++i) hist.emplace_back(random_unit(3, rng), i % 3 == 0 ? 1.0 : 0.0);
    const ArmSet arms = random_arms(30, 3, rng);
    glb::UcbGlm learner(3, fam);
    for (const auto& [x, y] : hist) learner.add(x, y);
    const Vec mle = learner.fit();
    EXPECT_EQ(glb::ucb_glm_select(hist, arms, fam, 0.0), glb::argmax_first(arms.matrix() * mle));
}

TEST(UcbGlm, SeparableLogitStaysFinite)
{
    const glb::GlmFamily fam(glb::FamilyKind::logit, 1.0);
    glb::UcbGlm learner(2, fam);
    for (int i = 0; i < 20; ++i) {
        learner.add(Vec::Unit(2, 0), 1.0);
        learner.add(-Vec::Unit(2, 0), 0.0);
    }
    const Vec th = learner.fit();
    EXPECT_TRUE(th.allFinite());
    EXPECT_LE(th.norm(), glb::UcbGlm::kNormGuard);
}

TEST(UcbGlm, EmptyHistoryRoundRobin)
{
    glb::UcbGlm learner(2, glb::GlmFamily(glb::FamilyKind::logit, 1.0));
    const ArmSet arms(basis_arms(2));
    EXPECT_EQ(learner.select(arms, 1.0), 0);
    EXPECT_EQ(learner.select(arms, 1.0), 1);
    EXPECT_EQ(glb::ucb_glm_select({}, arms, glb::GlmFamily(glb::FamilyKind::logit, 1.0), 1.0), 0);
}
