#include <cmath>

#include <gtest/gtest.h>

#include "sls/synth.hpp"

using namespace sls;

namespace {

SynthConfig base_config() {
    SynthConfig cfg;
    cfg.n = 1000;
    cfg.p = 5;
    cfg.links = {LinkKind::sigmoid(), LinkKind::identity()};
    cfg.master_seed = 42;
    return cfg;
}

MatrixXd empirical_covariance(const MatrixXd& x) {
    return (x.transpose() * x) / static_cast<double>(x.rows());
}

}  // namespace

TEST(SampleBetaStar, DegenerateStd) {
    auto cfg = base_config();
    cfg.beta_std = 0.0;
    cfg.beta_mean = 1.5;
    Engine rng = make_stream(1, streams::beta);
    MatrixXd b = sample_beta_star(cfg, rng);
    EXPECT_TRUE((b.array() == 1.5).all());
}

TEST(SampleBetaStar, PriorMoments) {
    auto cfg = base_config();
    cfg.p = 1000;
    cfg.links.assign(1000, LinkKind::identity());
    Engine rng = make_stream(3, streams::beta);
    MatrixXd b = sample_beta_star(cfg, rng);
    double mean = b.mean();
    double sd = std::sqrt((b.array() - mean).square().sum() / (b.size() - 1));
    EXPECT_GE(mean, 0.99);
    EXPECT_LE(mean, 1.01);
    EXPECT_GE(sd, 3.98);
    EXPECT_LE(sd, 4.02);
}

TEST(SampleBetaStar, SameSeedSameMatrix) {
    auto cfg = base_config();
    Engine a = make_stream(9, streams::beta), b = make_stream(9, streams::beta);
    EXPECT_EQ(sample_beta_star(cfg, a), sample_beta_star(cfg, b));
}

TEST(SampleDesign, IsotropicCovariance) {
    auto cfg = base_config();
    cfg.n = 1'000'000;
    cfg.p = 4;
    Engine rng = make_stream(5, streams::design);
    MatrixXd x = sample_design(cfg, rng);
    MatrixXd cov = empirical_covariance(x);
    EXPECT_LE((cov - 0.25 * MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.005);
}

TEST(SampleDesign, GeneralIdentityFactor) {
    auto cfg = base_config();
    cfg.n = 1'000'000;
    cfg.p = 2;
    cfg.dist = GaussianGeneral{MatrixXd::Identity(2, 2)};
    Engine rng = make_stream(6, streams::design);
    MatrixXd cov = empirical_covariance(sample_design(cfg, rng));
    EXPECT_LE((cov - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(SampleDesign, GeneralFactorCovariance) {
    auto cfg = base_config();
    cfg.n = 400'000;
    cfg.p = 2;
    MatrixXd l{{1.0, 0.0}, {0.5, 2.0}};
    cfg.dist = GaussianGeneral{l};
    Engine rng = make_stream(6, streams::design);
    MatrixXd cov = empirical_covariance(sample_design(cfg, rng));
    MatrixXd sigma = l * l.transpose();  // [[1, .5], [.5, 4.25]]
    EXPECT_LE((cov - sigma).cwiseAbs().maxCoeff(), 0.03);
}

TEST(SampleDesign, UniformSupport) {
    auto cfg = base_config();
    cfg.n = 20000;
    cfg.dist = UniformBox{0.3};
    Engine rng = make_stream(7, streams::design);
    MatrixXd x = sample_design(cfg, rng);
    EXPECT_LE(x.cwiseAbs().maxCoeff(), 0.3);
    cfg.dist = UniformBox{};
    rng = make_stream(7, streams::design);
    EXPECT_LE(sample_design(cfg, rng).cwiseAbs().maxCoeff(), 1.0 / cfg.p);
}

TEST(SynthConfig, Validation) {
    auto cfg = base_config();
    cfg.n = 3;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = base_config();
    cfg.noise_std = -1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = base_config();
    cfg.dist = GaussianGeneral{MatrixXd::Identity(2, 2)};
    EXPECT_THROW(cfg.validate(), DimensionMismatch);
    cfg = base_config();
    MatrixXd upper = MatrixXd::Identity(5, 5);
    upper(0, 1) = 1.0;
    cfg.dist = GaussianGeneral{upper};
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Generate, NoiselessIdentity) {
    auto cfg = base_config();
    cfg.links = {LinkKind::identity()};
    cfg.noise_std = 0.0;
    auto gen = generate(cfg);
    VectorXd u = gen.data.X * gen.spec.beta_star->row(0).transpose();
    for (Eigen::Index i = 0; i < cfg.n; ++i)
        EXPECT_NEAR(gen.data.y[i], gen.data.Z(i, 0) * u[i], 1e-12 * (1 + std::abs(gen.data.y[i])));
}

TEST(Generate, MeanResponseIsZero) {
    auto cfg = base_config();
    cfg.n = 1'000'000;
    cfg.p = 3;
    auto gen = generate(cfg);
    const auto& y = gen.data.y;
    double mean = y.mean();
    double sd = std::sqrt((y.array() - mean).square().mean());
    EXPECT_LE(std::abs(mean), 3.0 * sd / std::sqrt(double(cfg.n)));
}

TEST(Generate, CoefficientVariance) {
    auto cfg = base_config();
    cfg.n = 500'000;
    cfg.p = 2;
    auto gen = generate(cfg);  // n * k = 1e6
    const auto& z = gen.data.Z;
    double var = (z.array() - z.mean()).square().mean();
    EXPECT_GE(var, 0.99);
    EXPECT_LE(var, 1.01);
}

TEST(Generate, Deterministic) {
    auto cfg = base_config();
    auto a = generate(cfg), b = generate(cfg);
    EXPECT_EQ(a.data.X, b.data.X);
    EXPECT_EQ(a.data.Z, b.data.Z);
    EXPECT_EQ(a.data.y, b.data.y);
    EXPECT_EQ(*a.spec.beta_star, *b.spec.beta_star);
    cfg.master_seed = 43;
    EXPECT_NE(generate(cfg).data.X, a.data.X);
}

// Property: beta* does not depend on n and larger n extends the same streams.
TEST(GenerateProperty, StreamsAreIndependentOfN) {
    auto small = base_config();
    auto large = small;
    large.n = 3 * small.n;
    auto a = generate(small), b = generate(large);
    EXPECT_EQ(*a.spec.beta_star, *b.spec.beta_star);
    EXPECT_EQ(a.data.X, b.data.X.topRows(small.n));
    EXPECT_EQ(a.data.Z, b.data.Z.topRows(small.n));
    EXPECT_EQ(a.data.y, b.data.y.head(small.n));
}

TEST(GenerateProperty, PinnedBetaSeed) {
    auto cfg = base_config();
    cfg.beta_seed = 777;
    auto a = generate(cfg);
    cfg.master_seed = 1234;
    auto b = generate(cfg);
    EXPECT_EQ(*a.spec.beta_star, *b.spec.beta_star);
    EXPECT_NE(a.data.X, b.data.X);
}

// Property: y is exactly response(x_i, z_i, eps_i).
TEST(GenerateProperty, ResponseReproducesY) {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto cfg = base_config();
        cfg.links = {LinkKind::sigmoid(), LinkKind::logistic(), LinkKind::monomial(3)};
        cfg.master_seed = seed;
        auto gen = generate(cfg);
        for (Eigen::Index i = 0; i < cfg.n; ++i) {
            VectorXd x = gen.data.X.row(i).transpose(), z = gen.data.Z.row(i).transpose();
            ASSERT_EQ(gen.data.y[i], response(gen.spec, x, z, gen.noise[i]));
        }
    }
}

TEST(Generate, ProvidedBetaIsUsed) {
    auto cfg = base_config();
    MatrixXd beta = MatrixXd::Constant(2, 5, 0.5);
    cfg.beta_star = beta;
    EXPECT_EQ(*generate(cfg).spec.beta_star, beta);
}
