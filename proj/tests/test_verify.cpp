#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sls/quadrature.hpp"
#include "sls/synth.hpp"
#include "sls/verify.hpp"

using namespace sls;

TEST(GaussHermite, ExactForLowMoments) {
    GaussHermite rule(20);
    EXPECT_NEAR(rule.expect([](double) { return 1.0; }), 1.0, 1e-13);
    EXPECT_NEAR(rule.expect([](double w) { return w; }), 0.0, 1e-13);
    EXPECT_NEAR(rule.expect([](double w) { return w * w; }), 1.0, 1e-13);
    EXPECT_NEAR(rule.expect([](double w) { return std::pow(w, 4); }), 3.0, 1e-12);
    EXPECT_NEAR(rule.expect([](double w) { return std::pow(w, 6); }), 15.0, 1e-11);
    // E[cos W] = e^{-1/2}
    EXPECT_NEAR(GaussHermite(60).expect([](double w) { return std::cos(w); }), std::exp(-0.5), 1e-14);
}

TEST(SteinGap, IdentitySigmoidConstant) {
    Engine rng = make_stream(1, "stein");
    auto sig = LinkFunction::sigmoid();
    EXPECT_LE(stein_identity_gap([](double z) { return z; }, [](double) { return 1.0; }, 1'000'000, rng), 0.01);
    EXPECT_LE(stein_identity_gap([&](double z) { return sig.eval(z); }, [&](double z) { return sig.d1(z); },
                                 1'000'000, rng),
              0.005);
    EXPECT_LE(stein_identity_gap([](double) { return 2.0; }, [](double) { return 0.0; }, 1'000'000, rng), 0.005);
    EXPECT_THROW(stein_identity_gap([](double z) { return z; }, [](double) { return 1.0; }, 0, rng), Error);
}

TEST(SteinGap, ConstantGapIsMeanTimesValue) {
    Engine a = make_stream(2, "stein"), b = make_stream(2, "stein");
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0;
    for (int i = 0; i < 1000; ++i) sum += normal(b);
    double gap = stein_identity_gap([](double) { return 3.0; }, [](double) { return 0.0; }, 1000, a);
    EXPECT_NEAR(gap, std::abs(3.0 * sum / 1000), 1e-12);
}

// Property: the Monte-Carlo gap shrinks like n^{-1/2}.
TEST(SteinGapProperty, DecaysWithSampleSize) {
    auto sig = LinkFunction::sigmoid();
    auto g = [&](double z) { return sig.eval(z); };
    auto dg = [&](double z) { return sig.d1(z); };
    std::vector<double> small, large;
    for (std::uint64_t s = 0; s < 10; ++s) {
        Engine r1 = make_stream(s, "small"), r2 = make_stream(s, "large");
        small.push_back(stein_identity_gap(g, dg, 10'000, r1));
        large.push_back(stein_identity_gap(g, dg, 1'000'000, r2));
    }
    std::nth_element(small.begin(), small.begin() + 5, small.end());
    std::nth_element(large.begin(), large.begin() + 5, large.end());
    EXPECT_LE(large[5], 0.5 * small[5]);
}

TEST(CubicOracle, Examples) {
    VectorXd e1 = VectorXd::Unit(3, 0);
    auto o = cubic_oracle(e1, MatrixXd::Identity(3, 3));
    EXPECT_DOUBLE_EQ(o.c, 1.0 / 3.0);
    EXPECT_EQ(o.beta_ols, 3.0 * e1);

    VectorXd b = VectorXd::Constant(3, 1.0 / 3.0);  // ||b||^2 = 1/3
    auto unit = cubic_oracle(b, MatrixXd::Identity(3, 3));
    EXPECT_NEAR(unit.c, 1.0, 1e-15);
    EXPECT_TRUE(unit.beta_ols.isApprox(b, 1e-15));

    EXPECT_THROW(cubic_oracle(VectorXd::Zero(3), MatrixXd::Identity(3, 3)), DegenerateDirection);
}

// Property: c * beta_ols = beta* to machine precision.
TEST(CubicOracleProperty, OutputsAreInverse) {
    Engine rng = make_stream(4, "oracle");
    std::normal_distribution<double> normal;
    for (int t = 0; t < 200; ++t) {
        VectorXd b(4);
        MatrixXd l = MatrixXd::Zero(4, 4);
        for (int i = 0; i < 4; ++i) {
            b[i] = normal(rng);
            for (int j = 0; j < i; ++j) l(i, j) = normal(rng);
            l(i, i) = 0.5 + std::abs(normal(rng));
        }
        auto o = cubic_oracle(b, l);
        ASSERT_LE((o.c * o.beta_ols - b).norm(), 4e-16 * 8 * b.norm());
    }
}

TEST(Proportionality, IdentityLink) {
    const Eigen::Index p = 20;
    Engine rng = make_stream(1, "prop");
    VectorXd beta = VectorXd::LinSpaced(p, -2.0, 3.0);
    auto r = proportionality_gap(LinkFunction::identity(), beta, MatrixXd::Identity(p, p) / std::sqrt(20.0),
                                 1'000'000, rng);
    EXPECT_LE(r.gap, 0.02);
    EXPECT_DOUBLE_EQ(r.mean_d1, 1.0);
}

TEST(Proportionality, CubicAgainstOracle) {
    VectorXd e1 = VectorXd::Unit(5, 0);
    MatrixXd eye = MatrixXd::Identity(5, 5);
    Engine rng = make_stream(2, "prop");
    auto r = proportionality_gap(LinkFunction::monomial(3), e1, eye, 1'000'000, rng);
    auto o = cubic_oracle(e1, eye);
    EXPECT_LE(r.gap, 0.05);
    EXPECT_LE((r.beta_ols - o.beta_ols).norm() / o.beta_ols.norm(), 0.05);
    EXPECT_NEAR(1.0 / r.mean_d1, o.c, 0.05 * o.c);
}

TEST(Proportionality, SigmoidGaussianDesign) {
    const Eigen::Index p = 20;
    SynthConfig prior;
    prior.p = p;
    prior.n = p;
    prior.links = {LinkKind::sigmoid()};
    Engine brng = make_stream(3, "beta");
    VectorXd beta = sample_beta_star(prior, brng).row(0).transpose();
    Engine rng = make_stream(3, "prop");
    auto r = proportionality_gap(LinkFunction::sigmoid(), beta, MatrixXd::Identity(p, p) / std::sqrt(double(p)),
                                 1'000'000, rng);
    EXPECT_LE(r.gap, 0.05);
}

TEST(Proportionality, Errors) {
    Engine rng = make_stream(0, "prop");
    MatrixXd eye = MatrixXd::Identity(2, 2);
    EXPECT_THROW(proportionality_gap(LinkFunction::identity(), VectorXd::Zero(2), eye, 100, rng),
                 DegenerateDirection);
    EXPECT_THROW(proportionality_gap(LinkFunction::identity(), VectorXd::Ones(2), eye, 1, rng), Error);
    // sigmoid f' underflows to zero once |<x, beta>| exceeds ~745
    EXPECT_THROW(proportionality_gap(LinkFunction::sigmoid(), VectorXd::Constant(2, 1e15), eye, 100, rng),
                 DegenerateDirection);
}

// Property: identity-link gap shrinks as n_mc grows (median over seeds).
TEST(ProportionalityProperty, IdentityGapHalves) {
    const Eigen::Index p = 5;
    VectorXd beta = VectorXd::LinSpaced(p, 1.0, 2.0);
    MatrixXd eye = MatrixXd::Identity(p, p);
    std::vector<double> small, large;
    for (std::uint64_t s = 0; s < 15; ++s) {
        Engine r1 = make_stream(s, "a"), r2 = make_stream(s, "b");
        small.push_back(proportionality_gap(LinkFunction::identity(), beta, eye, 10'000, r1).gap);
        large.push_back(proportionality_gap(LinkFunction::identity(), beta, eye, 40'000, r2).gap);
    }
    std::nth_element(small.begin(), small.begin() + 7, small.end());
    std::nth_element(large.begin(), large.begin() + 7, large.end());
    EXPECT_LE(large[7], 0.5 * small[7] * 1.25);  // expected ratio 0.5; 25% slack for 15 seeds
}

TEST(SigmoidScaleConstants, Constants) {
    auto rep = theorem7_check();
    EXPECT_NEAR(rep.a, 0.21877, 1e-4);
    EXPECT_NEAR(rep.b, 0.05947, 1e-4);
    EXPECT_GT(rep.ell_at_6, 1.22);
    EXPECT_GE(rep.min_ell_deriv, 0.19);
    EXPECT_TRUE(rep.passed);
    // Adaptive quadrature at 30 digits (mpmath): ell(6) and ell'(6), the grid minimum.
    EXPECT_NEAR(rep.ell_at_6, 1.46767916097916383, 1e-12);
    EXPECT_NEAR(rep.min_ell_deriv, 0.23428830152165513, 1e-12);
    EXPECT_NEAR(rep.a, 0.218773306158693326, 1e-15);
    EXPECT_NEAR(rep.b, 0.0594678358454340678, 1e-15);
}

TEST(SigmoidScaleConstants, QuadratureStable) {
    auto a = theorem7_check(601, 200), b = theorem7_check(601, 400);
    EXPECT_LT(std::abs(a.ell_at_6 - b.ell_at_6), 1e-8);
    EXPECT_LT(std::abs(a.min_ell_deriv - b.min_ell_deriv), 1e-8);
}

TEST(SigmoidScaleConstants, ArgumentChecks) {
    EXPECT_THROW(theorem7_check(1, 200), Error);
    EXPECT_THROW(theorem7_check(601, 50), Error);
}

TEST(CovarianceSummary, Examples) {
    auto id = covariance_summary(MatrixXd::Identity(3, 3));
    EXPECT_NEAR(id.lambda_min, 1.0, 1e-14);
    EXPECT_NEAR(id.rho_2, 1.0, 1e-14);
    EXPECT_NEAR(id.rho_inf, 1.0, 1e-14);
    EXPECT_TRUE(id.diag_dominant_sqrt);

    auto diag = covariance_summary(MatrixXd{{2.0, 0.0}, {0.0, 1.0}});  // Sigma = diag(4, 1)
    EXPECT_NEAR(diag.lambda_min, 1.0, 1e-14);
    EXPECT_NEAR(diag.rho_2, 4.0, 1e-13);
    EXPECT_NEAR(diag.rho_inf, 4.0, 1e-13);

    // Sigma = [[2,1],[1,2]] = L L^T with L = [[sqrt2, 0], [1/sqrt2, sqrt(3/2)]]
    MatrixXd l{{std::sqrt(2.0), 0.0}, {1.0 / std::sqrt(2.0), std::sqrt(1.5)}};
    auto s = covariance_summary(l);
    EXPECT_NEAR(s.rho_2, 3.0, 1e-13);
    EXPECT_NEAR(s.lambda_min, 1.0, 1e-13);
    // ||Sigma||_inf = 3, Sigma^{-1} = [[2,-1],[-1,2]]/3 -> 1
    EXPECT_NEAR(s.rho_inf, 3.0, 1e-13);
    EXPECT_TRUE(s.diag_dominant_sqrt);  // root = [[1.366, .366], [.366, 1.366]]
}

TEST(CovarianceSummary, NotDiagonallyDominantRoot) {
    // Sigma = [[1, .95], [.95, 1]]: root has off-diagonal ~0.7 > diagonal ~0.7? check explicitly
    MatrixXd sigma{{1.0, 0.95}, {0.95, 1.0}};
    MatrixXd l = sigma.llt().matrixL();
    auto s = covariance_summary(l);
    // eigenvalues 1.95 and 0.05; root entries (sqrt(1.95) +- sqrt(0.05)) / 2
    double diag = (std::sqrt(1.95) + std::sqrt(0.05)) / 2, off = (std::sqrt(1.95) - std::sqrt(0.05)) / 2;
    EXPECT_EQ(s.diag_dominant_sqrt, diag >= off);
    EXPECT_NEAR(s.rho_2, 1.95 / 0.05, 1e-9);
}
