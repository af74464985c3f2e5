#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sls/error.hpp"
#include "sls/link.hpp"
#include "sls/model.hpp"
#include "sls/rng.hpp"

namespace sls {

/// x ~ N(0, I/p)
struct GaussianIsotropic {};

/// x = factor * w, w ~ N(0, I); factor is lower-triangular with a positive diagonal.
struct GaussianGeneral {
    MatrixXd factor;
};

/// x_t ~ U[-half_width, half_width] independently. half_width <= 0 means 1/p.
struct UniformBox {
    double half_width = 0.0;

    double resolved(Eigen::Index p) const {
        return half_width > 0 ? half_width : 1.0 / static_cast<double>(p);
    }
};

using DesignDistribution = std::variant<GaussianIsotropic, GaussianGeneral, UniformBox>;

inline void validate_design(const DesignDistribution& dist, Eigen::Index p) {
    if (auto* g = std::get_if<GaussianGeneral>(&dist)) {
        if (g->factor.rows() != p || g->factor.cols() != p)
            throw DimensionMismatch("design: covariance factor must be p x p");
        for (Eigen::Index i = 0; i < p; ++i) {
            if (!(g->factor(i, i) > 0)) throw Error("design: covariance factor needs a positive diagonal");
            for (Eigen::Index j = i + 1; j < p; ++j)
                if (g->factor(i, j) != 0.0) throw Error("design: covariance factor must be lower-triangular");
        }
    }
}

struct SynthConfig {
    Eigen::Index n = 0, p = 0;
    DesignDistribution dist = GaussianIsotropic{};
    std::vector<LinkKind> links;
    double beta_mean = 1.0;
    double beta_std = 4.0;
    double noise_std = 1.0;
    std::uint64_t master_seed = 0;
    // Ground truth to use instead of drawing one (k x p).
    std::optional<MatrixXd> beta_star;
    // Seed for the beta* stream when it differs from master_seed (pinned truth).
    std::optional<std::uint64_t> beta_seed;

    Eigen::Index k() const { return static_cast<Eigen::Index>(links.size()); }

    void validate() const {
        if (p <= 0 || n <= 0) throw Error("synth: n and p must be positive");
        if (n < p) throw Error("synth: need n >= p");
        if (links.empty()) throw Error("synth: at least one link is required");
        if (!(beta_std >= 0)) throw Error("synth: beta_std must be >= 0");
        if (!(noise_std >= 0)) throw Error("synth: noise_std must be >= 0");
        if (beta_star && (beta_star->rows() != k() || beta_star->cols() != p))
            throw DimensionMismatch("synth: beta_star must be k x p");
        validate_design(dist, p);
    }
};

/// Stream labels; each quantity has its own stream so changing n never
/// changes beta*, and a larger n extends (rather than reshuffles) X, Z and eps.
namespace streams {
inline constexpr const char* beta = "beta";
inline constexpr const char* design = "design";
inline constexpr const char* coef = "coef";
inline constexpr const char* noise = "noise";
}  // namespace streams

inline MatrixXd sample_beta_star(const SynthConfig& cfg, Engine& rng) {
    MatrixXd beta(cfg.k(), cfg.p);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < cfg.k(); ++j)
        for (Eigen::Index t = 0; t < cfg.p; ++t) beta(j, t) = cfg.beta_mean + cfg.beta_std * normal(rng);
    return beta;
}

/// Rows are filled in order, one row at a time.
inline MatrixXd sample_design(const SynthConfig& cfg, Engine& rng) {
    const Eigen::Index n = cfg.n, p = cfg.p;
    MatrixXd X(n, p);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::visit(
        [&](const auto& dist) {
            using D = std::decay_t<decltype(dist)>;
            if constexpr (std::is_same_v<D, GaussianIsotropic>) {
                const double sd = 1.0 / std::sqrt(static_cast<double>(p));
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index t = 0; t < p; ++t) X(i, t) = sd * normal(rng);
            } else if constexpr (std::is_same_v<D, GaussianGeneral>) {
                VectorXd w(p);
                for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index t = 0; t < p; ++t) w[t] = normal(rng);
                    X.row(i) = (dist.factor.template triangularView<Eigen::Lower>() * w).transpose();
                }
            } else {
                const double h = dist.resolved(p);
                std::uniform_real_distribution<double> uniform(-h, h);
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index t = 0; t < p; ++t) X(i, t) = uniform(rng);
            }
        },
        cfg.dist);
    return X;
}

struct Generated {
    Dataset data;
    ModelSpec spec;
    VectorXd noise;  // the eps draws, so y can be recomputed exactly
};

inline Generated generate(const SynthConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = cfg.n, k = cfg.k();

    Generated out;
    out.spec.p = cfg.p;
    out.spec.noise_std = cfg.noise_std;
    for (const auto& kind : cfg.links) out.spec.links.emplace_back(kind);
    if (cfg.beta_star) {
        out.spec.beta_star = *cfg.beta_star;
    } else {
        Engine rng = make_stream(cfg.beta_seed.value_or(cfg.master_seed), streams::beta);
        out.spec.beta_star = sample_beta_star(cfg, rng);
    }

    Engine design_rng = make_stream(cfg.master_seed, streams::design);
    out.data.X = sample_design(cfg, design_rng);

    Engine coef_rng = make_stream(cfg.master_seed, streams::coef);
    Engine noise_rng = make_stream(cfg.master_seed, streams::noise);
    std::normal_distribution<double> normal(0.0, 1.0);
    out.data.Z.resize(n, k);
    out.noise.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) out.data.Z(i, j) = normal(coef_rng);
        out.noise[i] = cfg.noise_std * normal(noise_rng);
    }

    out.data.y.resize(n);
    VectorXd x(cfg.p), z(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        x = out.data.X.row(i).transpose();
        z = out.data.Z.row(i).transpose();
        out.data.y[i] = response(out.spec, x, z, out.noise[i]);
    }
    return out;
}

}  // namespace sls
