#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sls/link.hpp"
#include "sls/model.hpp"

using namespace sls;

TEST(Link, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(LinkFunction::sigmoid().eval(0.0), 0.5);
    EXPECT_DOUBLE_EQ(LinkFunction::logistic().eval(0.0), std::log(2.0));
    EXPECT_DOUBLE_EQ(LinkFunction::monomial(3).eval(2.0), 8.0);
    EXPECT_DOUBLE_EQ(LinkFunction::identity().eval(-1.5), -1.5);

    EXPECT_DOUBLE_EQ(LinkFunction::sigmoid().d1(0.0), 0.25);
    EXPECT_DOUBLE_EQ(LinkFunction::logistic().d1(0.0), -0.5);
    EXPECT_DOUBLE_EQ(LinkFunction::sigmoid().d2(0.0), 0.0);
    EXPECT_DOUBLE_EQ(LinkFunction::logistic().d2(0.0), 0.25);
    EXPECT_DOUBLE_EQ(LinkFunction::monomial(5).d1(2.0), 80.0);
    EXPECT_DOUBLE_EQ(LinkFunction::monomial(5).d2(2.0), 160.0);
    EXPECT_DOUBLE_EQ(LinkFunction::identity().d2(3.0), 0.0);
}

TEST(Link, SigmoidDerivativesAtTwoPointFive) {
    // mpmath reference at 30 digits
    EXPECT_NEAR(LinkFunction::sigmoid().d1(2.5), 0.0701037165451081569, 1e-15);
    EXPECT_NEAR(LinkFunction::sigmoid().d2(2.5), -0.0594678358454340678, 1e-15);
    EXPECT_NEAR(LinkFunction::sigmoid().d1(2.5), 0.070104, 5e-7);
    EXPECT_NEAR(LinkFunction::sigmoid().d2(2.5), -0.059467, 1e-6);
}

TEST(Link, ParseNames) {
    EXPECT_EQ(parse_link_kind("identity"), LinkKind::identity());
    EXPECT_EQ(parse_link_kind("monomial:5"), LinkKind::monomial(5));
    EXPECT_EQ(to_string(parse_link_kind("sigmoid")), "sigmoid");
    EXPECT_EQ(to_string(parse_link_kind("monomial:3")), "monomial:3");
    EXPECT_THROW(parse_link_kind("monomial:2"), Error);
    EXPECT_THROW(parse_link_kind("monomial:0"), Error);
    EXPECT_THROW(parse_link_kind("monomial:"), Error);
    EXPECT_THROW(parse_link_kind("monomial:3x"), Error);
    EXPECT_THROW(parse_link_kind("tanh"), Error);
}

TEST(Link, RegularityMetadata) {
    EXPECT_TRUE(LinkFunction::sigmoid().has_regular_derivative());
    EXPECT_TRUE(LinkFunction::logistic().has_regular_derivative());
    EXPECT_TRUE(LinkFunction::identity().has_regular_derivative());
    EXPECT_FALSE(LinkFunction::monomial(3).has_regular_derivative());
    EXPECT_FALSE(LinkFunction::monomial(3).bound_d1().has_value());
    EXPECT_DOUBLE_EQ(*LinkFunction::sigmoid().bound_d1(), 0.25);
}

TEST(Link, NoOverflowAtExtremeArguments) {
    for (double z : {-1e300, -800.0, -40.0, 40.0, 800.0, 1e300}) {
        for (auto link : {LinkFunction::sigmoid(), LinkFunction::logistic()}) {
            EXPECT_TRUE(std::isfinite(link.eval(z))) << link.name() << " " << z;
            EXPECT_TRUE(std::isfinite(link.d1(z))) << link.name() << " " << z;
            EXPECT_TRUE(std::isfinite(link.d2(z))) << link.name() << " " << z;
        }
    }
    EXPECT_DOUBLE_EQ(LinkFunction::logistic().eval(-800.0), 800.0);
    EXPECT_DOUBLE_EQ(LinkFunction::logistic().d1(-800.0), -1.0);
    EXPECT_DOUBLE_EQ(LinkFunction::sigmoid().eval(-800.0), 0.0);
}

// Property: analytic derivatives agree with central differences.
TEST(LinkProperty, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pick(-20.0, 20.0);
    const LinkFunction links[] = {LinkFunction::identity(), LinkFunction::monomial(1), LinkFunction::monomial(3),
                                  LinkFunction::monomial(5), LinkFunction::sigmoid(), LinkFunction::logistic()};
    for (const auto& link : links) {
        for (int i = 0; i < 1000; ++i) {
            double z = pick(rng);
            double fd1 = test::central_difference([&](double u) { return link.eval(u); }, z);
            double fd2 = test::central_difference([&](double u) { return link.d1(u); }, z);
            // Rounding in the difference quotient scales with |f(z)|.
            double tol1 = 1e-5 * (1 + std::abs(link.d1(z))) + 1e-9 * std::abs(link.eval(z));
            double tol2 = 1e-5 * (1 + std::abs(link.d2(z))) + 1e-9 * std::abs(link.d1(z));
            ASSERT_NEAR(link.d1(z), fd1, tol1) << link.name() << " z=" << z;
            ASSERT_NEAR(link.d2(z), fd2, tol2) << link.name() << " z=" << z;
        }
    }
}

TEST(LinkProperty, SigmoidAndLogisticRanges) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pick(-30.0, 30.0);
    auto sig = LinkFunction::sigmoid();
    auto lg = LinkFunction::logistic();
    for (int i = 0; i < 20000; ++i) {
        double z = pick(rng);
        double s = sig.eval(z);
        ASSERT_GT(s, 0.0);
        ASSERT_LT(s, 1.0);
        ASSERT_GT(sig.d1(z), 0.0);
        ASSERT_LE(sig.d1(z), 0.25);
        ASSERT_LE(std::abs(sig.d2(z)), 0.1);
        ASSERT_GT(lg.d1(z), -1.0);
        ASSERT_LT(lg.d1(z), 0.0);
    }
}

TEST(Response, Examples) {
    ModelSpec cubic{2, {LinkFunction::monomial(3)}, MatrixXd{{1.0, 0.0}}, 0.0};
    EXPECT_DOUBLE_EQ(response(cubic, VectorXd{{2.0, 0.0}}, VectorXd{{1.0}}, 0.0), 8.0);
    EXPECT_DOUBLE_EQ(response(cubic, VectorXd{{2.0, 0.0}}, VectorXd{{0.0}}, 0.0), 0.0);

    ModelSpec lin{2, {LinkFunction::identity(), LinkFunction::identity()}, MatrixXd{{1.0, 0.0}, {0.0, 1.0}}, 0.0};
    EXPECT_DOUBLE_EQ(response(lin, VectorXd{{3.0, 4.0}}, VectorXd{{1.0, -1.0}}, 0.5), -0.5);

    ModelSpec no_truth{2, {LinkFunction::identity()}, std::nullopt, 0.0};
    EXPECT_THROW(response(no_truth, VectorXd{{1.0, 1.0}}, VectorXd{{1.0}}, 0.0), Error);
    EXPECT_THROW(response(cubic, VectorXd{{1.0}}, VectorXd{{1.0}}, 0.0), DimensionMismatch);
}

TEST(ResponseProperty, LinearInCoefficients) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    ModelSpec spec{3, {LinkFunction::sigmoid(), LinkFunction::logistic()},
                   MatrixXd{{1.0, -2.0, 0.5}, {0.3, 0.0, 4.0}}, 1.0};
    for (int t = 0; t < 200; ++t) {
        VectorXd x{{normal(rng), normal(rng), normal(rng)}};
        VectorXd z1{{normal(rng), normal(rng)}}, z2{{normal(rng), normal(rng)}};
        double a = normal(rng), eps = normal(rng);
        double lhs = response(spec, x, a * z1 + z2, eps) - eps;
        double rhs = a * (response(spec, x, z1, eps) - eps) + (response(spec, x, z2, eps) - eps);
        ASSERT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(lhs)));
    }
}

TEST(ModelSpec, Validation) {
    ModelSpec ok{2, {LinkFunction::identity()}, MatrixXd::Ones(1, 2), 1.0};
    EXPECT_NO_THROW(ok.validate());
    ModelSpec bad = ok;
    bad.beta_star = MatrixXd::Ones(2, 2);
    EXPECT_THROW(bad.validate(), DimensionMismatch);
    Dataset d{MatrixXd::Ones(1, 2), MatrixXd::Ones(1, 1), VectorXd::Ones(1)};
    EXPECT_THROW(d.validate(), Error);  // n < p
}
