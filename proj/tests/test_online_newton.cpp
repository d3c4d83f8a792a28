#include <glb/online_newton.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using glb::FamilyKind;
using glb::GlmFamily;
using glb::Mat;
using glb::OnsState;
using glb::Vec;

namespace {

Vec unit_ball_point(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = n01(rng);
    return v / v.norm() * std::pow(u(rng), 1.0 / d);
}

Mat random_spd(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Mat B(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) B(i, j) = n01(rng);
    return B * B.transpose() + 0.1 * Mat::Identity(d, d);
}

double qform(const Vec& v, const Mat& A) { return v.dot(A * v); }

}  // namespace

TEST(OnsInit, TwoDimensional)
{
    const OnsState s = glb::ons_init(2, 1.0, 1.0, 0.2);
    EXPECT_TRUE(s.A().isApprox(Mat::Identity(2, 2)));
    EXPECT_EQ(s.predict(), Vec::Zero(2));
}

TEST(OnsInit, OneDimensional)
{
    const OnsState s(1, 0.1, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(s.A()(0, 0), 0.1);
    EXPECT_DOUBLE_EQ(s.A_inv()(0, 0), 10.0);
}

TEST(OnsInit, BudgetAtStart)
{
    EXPECT_NEAR(glb::ons_regret_budget(OnsState(2, 1.0, 1.0, 0.2)), 0.4, 1e-15);
}

TEST(OnsInit, RejectsNonPositive)
{
    EXPECT_THROW(OnsState(0, 1.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(OnsState(2, 0.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(OnsState(2, 1.0, -1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(OnsState(2, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(OnsPredict, IdempotentAndZeroAtStart)
{
    OnsState s(3, 1.0, 1.0, 0.25);
    EXPECT_EQ(glb::ons_predict(s), Vec::Zero(3));
    s.update(Vec::Unit(3, 1), 1.0, GlmFamily(FamilyKind::logit, 1.0));
    const Vec a = s.predict();
    const Vec b = s.predict();
    EXPECT_EQ(a, b);
}

TEST(OnsUpdate, ZeroGradientKeepsTheta)
{
    OnsState s(1, 1.0, 1.0, 1.0);
    const double g = glb::ons_update(s, Vec::Ones(1), 0.0, GlmFamily(FamilyKind::gaussian, 1.0));
    EXPECT_DOUBLE_EQ(g, 0.0);
    EXPECT_DOUBLE_EQ(s.predict()(0), 0.0);
    EXPECT_DOUBLE_EQ(s.A()(0, 0), 2.0);
}

TEST(OnsUpdate, LogitStepMatchesDenseRecompute)
{
    const GlmFamily fam(FamilyKind::logit, 1.0);
    OnsState s(2, 1.0, 1.0, 0.25);
    const Vec x = Vec::Unit(2, 0);
    const double g = s.update(x, 1.0, fam);

    // dense oracle
    const Mat A = Mat::Identity(2, 2) + x * x.transpose();
    const Mat Ainv = A.inverse();
    const double g_oracle = -1.0 + 1.0 / (1.0 + std::exp(-0.0));
    Vec theta_p = Vec::Zero(2) - (g_oracle / 0.25) * Ainv * x;
    EXPECT_DOUBLE_EQ(g, -0.5);
    EXPECT_NEAR(theta_p.norm(), 1.0, 1e-15);  // already on the sphere, projection is the identity
    EXPECT_NEAR((s.predict() - theta_p).norm(), 0.0, 1e-12);
    EXPECT_NEAR(s.predict()(0), 1.0, 1e-12);
    EXPECT_TRUE(s.A().isApprox(A));
    EXPECT_NEAR(glb::ons_regret_budget(s), 0.75, 1e-12);
}

TEST(OnsUpdate, ShermanMorrisonMatchesDenseInverse)
{
    std::mt19937_64 rng(11);
    const GlmFamily fam(FamilyKind::logit, 1.0);
    OnsState s(4, 1.0, 1.0, fam.constants().kappa);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 100; ++i) s.update(unit_ball_point(4, rng), coin(rng) ? 1.0 : 0.0, fam);
    EXPECT_LE((s.A_inv() - s.A().inverse()).norm(), 1e-7);
}

TEST(OnsUpdate, RejectsBadInput)
{
    const GlmFamily fam(FamilyKind::gaussian, 1.0);
    OnsState s(2, 1.0, 1.0, 1.0);
    EXPECT_THROW(s.update(Vec::Constant(2, 1.0), 0.0, fam), std::invalid_argument);
    EXPECT_THROW(s.update(Vec::Unit(2, 0), std::numeric_limits<double>::quiet_NaN(), fam), std::invalid_argument);
    EXPECT_THROW(s.update(Vec::Unit(3, 0), 0.0, fam), std::invalid_argument);
}

TEST(BallProjection, EuclideanCase)
{
    const Vec p = glb::ball_projection_in_A_norm(Vec::Unit(2, 0) * 3.0, Mat::Identity(2, 2), 1.0);
    EXPECT_NEAR(p(0), 1.0, 1e-9);
    EXPECT_NEAR(p(1), 0.0, 1e-12);
}

TEST(BallProjection, InteriorPointUnchanged)
{
    std::mt19937_64 rng(5);
    const Vec t = Vec::Unit(3, 2) * 0.5;
    EXPECT_EQ(glb::ball_projection_in_A_norm(t, random_spd(3, rng), 1.0), t);
}

TEST(BallProjection, AnisotropicMatchesCircleGridSearch)
{
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = 4.0;
    A(1, 1) = 1.0;
    Vec tp(2);
    tp << 2.0, 2.0;
    const Vec p = glb::ball_projection_in_A_norm(tp, A, 1.0);

    // grid search over the unit circle (the constrained optimum is on the boundary)
    const int n = 2000000;
    double best = std::numeric_limits<double>::infinity();
    Vec arg(2);
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        Vec c(2);
        c << std::cos(a), std::sin(a);
        const double v = qform(c - tp, A);
        if (v < best) {
            best = v;
            arg = c;
        }
    }
    EXPECT_NEAR(p.norm(), 1.0, 1e-10);
    EXPECT_NEAR((p - arg).norm(), 0.0, 1e-4);
    EXPECT_LE(qform(p - tp, A), best + 1e-12);
}

TEST(BallProjection, RejectsNonSpd)
{
    Mat A = Mat::Identity(2, 2);
    A(1, 1) = -1.0;
    EXPECT_THROW(glb::ball_projection_in_A_norm(Vec::Ones(2) * 3.0, A, 1.0), std::domain_error);
}

TEST(BallProjectionProperty, BeatsRandomFeasiblePoints)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int d : {2, 3}) {
        // shared pool of 1e5 points in the unit ball, scaled by S per instance
        const int pool_n = 100000;
        Mat P(pool_n, d);
        for (int i = 0; i < pool_n; ++i) P.row(i) = unit_ball_point(d, rng).transpose();
        for (int inst = 0; inst < 5000; ++inst) {
            const Mat A = random_spd(d, rng);
            const double S = u(rng);
            Vec tp = unit_ball_point(d, rng) * (4.0 * S);
            const Vec p = glb::ball_projection_in_A_norm(tp, A, S);
            ASSERT_LE(p.norm(), S + 1e-9);
            const double obj = qform(p - tp, A);
            // (S p_i - tp)^T A (S p_i - tp) for every pool point
            const Mat PA = P * A;
            const Vec vals = (S * S) * PA.cwiseProduct(P).rowwise().sum() - (2.0 * S) * (PA * tp) +
                             Vec::Constant(pool_n, qform(tp, A));
            ASSERT_LE(obj, vals.minCoeff() + 1e-8) << "d=" << d << " instance " << inst;
        }
    }
}

TEST(OnsProperty, InvariantsOverLongRun)
{
    std::mt19937_64 rng(23);
    const GlmFamily fam(FamilyKind::logit, 1.0);
    const double eps = 0.5;
    OnsState s(3, eps, 1.0, fam.constants().kappa);
    std::bernoulli_distribution coin(0.6);
    double prev_budget = s.regret_budget();
    double prev_acc = s.accumulated();
    for (int t = 0; t < 10000; ++t) {
        s.update(unit_ball_point(3, rng), coin(rng) ? 1.0 : 0.0, fam);
        ASSERT_LE(s.predict().norm(), 1.0 + 1e-9);
        ASSERT_GE(s.accumulated(), prev_acc);
        ASSERT_GE(s.regret_budget(), prev_budget);
        prev_acc = s.accumulated();
        prev_budget = s.regret_budget();
        if (t % 997 == 0) {
            Eigen::SelfAdjointEigenSolver<Mat> es(s.A());
            ASSERT_GE(es.eigenvalues().minCoeff(), eps - 1e-9);
        }
    }
    EXPECT_LE((s.A() * s.A_inv() - Mat::Identity(3, 3)).norm(), 1e-7);
}

TEST(OnsProperty, PathwiseRegretBelowBudget)
{
    const GlmFamily fam(FamilyKind::logit, 1.0);
    std::mt19937_64 rng(31);
    Vec theta_star = unit_ball_point(4, rng);
    theta_star /= theta_star.norm();
    OnsState s(4, 1.0, 1.0, fam.constants().kappa);
    double regret = 0.0;
    for (int t = 0; t < 1000; ++t) {
        Vec x = unit_ball_point(4, rng);
        x /= x.norm();
        const double y = fam.sample_reward(x.dot(theta_star), rng);
        regret += fam.loss(x.dot(s.predict()), y) - fam.loss(x.dot(theta_star), y);
        s.update(x, y, fam);
        ASSERT_LE(regret, s.regret_budget() + 1e-6) << "t=" << t;
    }
}
