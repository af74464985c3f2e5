#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "sls/error.hpp"
#include "sls/link.hpp"
#include "sls/model.hpp"
#include "sls/quadrature.hpp"
#include "sls/rng.hpp"

namespace sls {

/// |mean(z g(z)) - mean(g'(z))| over n_mc standard normal draws. The
/// standard normal is its own zero-bias law, so the population gap is zero.
template <typename G, typename DG>
double stein_identity_gap(G&& g, DG&& dg, long n_mc, Engine& rng) {
    if (n_mc < 1) throw Error("stein_identity_gap: n_mc must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    double lhs = 0.0, rhs = 0.0;
    for (long i = 0; i < n_mc; ++i) {
        double z = normal(rng);
        lhs += z * g(z);
        rhs += dg(z);
    }
    return std::abs(lhs - rhs) / static_cast<double>(n_mc);
}

struct CubicOracle {
    double c = 0.0;
    VectorXd beta_ols;
};

/// Population answer for f(z) = z^3 and x ~ N(0, Sigma), Sigma = L L^T:
/// E[f'(<x, beta>)] = 3 beta^T Sigma beta, so beta_ols = 3 s beta and c = 1 / (3 s).
inline CubicOracle cubic_oracle(const VectorXd& beta_star, const MatrixXd& sigma_factor) {
    if (sigma_factor.rows() != beta_star.size() || sigma_factor.cols() != beta_star.size())
        throw DimensionMismatch("cubic_oracle: factor must be p x p");
    const double s = (sigma_factor.transpose() * beta_star).squaredNorm();
    if (!(s > 0)) throw DegenerateDirection("cubic_oracle: beta^T Sigma beta is zero");
    return {1.0 / (3.0 * s), 3.0 * s * beta_star};
}

struct ProportionalityReport {
    double gap = 0.0;      // ||beta_ols / m - beta*|| / ||beta*||
    double mean_d1 = 0.0;  // m = mean f'(<x, beta*>)
    VectorXd beta_ols;     // Sigma^{-1} mean(f(<x, beta*>) x)
};

/// Monte-Carlo check of beta* = c * beta_ols with c = 1 / E[f'(<x, beta*>)].
/// z is marginalised out: E[z y x] = E[f(<x, beta*>) x].
inline ProportionalityReport proportionality_gap(const LinkFunction& link, const VectorXd& beta_star,
                                                 const MatrixXd& sigma_factor, long n_mc, Engine& rng) {
    const Eigen::Index p = beta_star.size();
    if (sigma_factor.rows() != p || sigma_factor.cols() != p)
        throw DimensionMismatch("proportionality_gap: factor must be p x p");
    if (n_mc < p) throw Error("proportionality_gap: need n_mc >= p");
    const double beta_norm = beta_star.norm();
    if (!(beta_norm > 0)) throw DegenerateDirection("proportionality_gap: beta* is zero");

    std::normal_distribution<double> normal(0.0, 1.0);
    const auto factor = sigma_factor.triangularView<Eigen::Lower>();
    VectorXd w(p), x(p), moment = VectorXd::Zero(p);
    double d1_sum = 0.0;
    for (long i = 0; i < n_mc; ++i) {
        for (Eigen::Index t = 0; t < p; ++t) w[t] = normal(rng);
        x.noalias() = factor * w;
        double u = x.dot(beta_star);
        moment += link.eval(u) * x;
        d1_sum += link.d1(u);
    }
    const double count = static_cast<double>(n_mc);
    ProportionalityReport out;
    out.mean_d1 = d1_sum / count;
    if (std::abs(out.mean_d1) < 1e-12)
        throw DegenerateDirection("proportionality_gap: E[f'] vanishes for this direction");
    moment /= count;
    // Sigma^{-1} v = L^{-T} L^{-1} v
    VectorXd tmp = factor.solve(moment);
    out.beta_ols = sigma_factor.transpose().triangularView<Eigen::Upper>().solve(tmp);
    out.gap = (out.beta_ols / out.mean_d1 - beta_star).norm() / beta_norm;
    return out;
}

struct Theorem7Report {
    double a = 0.0;
    double b = 0.0;
    double ell_at_6 = 0.0;
    double min_ell_deriv = 0.0;
    bool passed = false;
};

namespace detail {

// Third derivative of the sigmoid; even, written in t = e^{-|z|}.
inline double sigmoid_d3(double z) {
    double t = std::exp(-std::abs(z));
    double s = 1.0 + t;
    return t * (t * t - 4.0 * t + 1.0) / (s * s * s * s);
}

}  // namespace detail

/// Sigmoid link, x ~ N(0, I/p), ||beta_ols|| = sqrt(p)/20, so <x, beta_ols> ~ W/20.
/// ell(z) = z E[f'(Wz/20)], ell'(z) = E[f'(Wz/20)] + (z/20)^2 E[f'''(Wz/20)].
/// Expectations by Gauss-Hermite; min ell' over a uniform grid on [0, 6].
inline Theorem7Report theorem7_check(int grid_points = 601, int n_quad = 200) {
    if (grid_points < 2) throw Error("theorem7_check: grid_points must be >= 2");
    if (n_quad < 100) throw Error("theorem7_check: n_quad must be >= 100");
    constexpr double c_bar = 6.0, eta = 0.22, lower_bound = 0.19;
    const LinkFunction f = LinkFunction::sigmoid();
    const GaussHermite rule(n_quad);

    auto ell = [&](double z) { return z * rule.expect([&](double w) { return f.d1(w * z / 20.0); }); };
    auto ell_deriv = [&](double z) {
        double r = z / 20.0;
        return rule.expect([&](double w) { return f.d1(w * r); }) +
               r * r * rule.expect([&](double w) { return detail::sigmoid_d3(w * r); });
    };

    Theorem7Report rep;
    rep.a = f.d1(2.5) - 2.5 * f.d2(2.5);
    rep.b = -f.d2(2.5);
    rep.ell_at_6 = ell(c_bar);
    rep.min_ell_deriv = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        double z = c_bar * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        rep.min_ell_deriv = std::min(rep.min_ell_deriv, ell_deriv(z));
    }
    rep.passed = rep.ell_at_6 > 1.0 + eta && rep.min_ell_deriv >= lower_bound;
    return rep;
}

struct CovarianceSummary {
    double lambda_min = 0.0;
    double rho_2 = 1.0;
    double rho_inf = 1.0;
    bool diag_dominant_sqrt = false;
};

namespace detail {

inline bool diagonally_dominant(const MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double off = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
        if (std::abs(m(i, i)) < off) return false;
    }
    return true;
}

inline double inf_norm(const MatrixXd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace detail

/// Conditioning of Sigma = L L^T and diagonal dominance of its symmetric root.
inline CovarianceSummary covariance_summary(const MatrixXd& sigma_factor) {
    if (sigma_factor.rows() != sigma_factor.cols())
        throw DimensionMismatch("covariance_summary: factor must be square");
    MatrixXd sigma = sigma_factor * sigma_factor.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma);
    const VectorXd& lambda = eig.eigenvalues();
    CovarianceSummary out;
    out.lambda_min = lambda.minCoeff();
    if (!(out.lambda_min > 0)) throw Error("covariance_summary: Sigma is not positive definite");
    out.rho_2 = lambda.maxCoeff() / out.lambda_min;
    const MatrixXd& u = eig.eigenvectors();
    MatrixXd inv = u * lambda.cwiseInverse().asDiagonal() * u.transpose();
    out.rho_inf = std::max(1.0, detail::inf_norm(sigma) * detail::inf_norm(inv));
    MatrixXd root = u * lambda.cwiseSqrt().asDiagonal() * u.transpose();
    out.diag_dominant_sqrt = detail::diagonally_dominant(root);
    return out;
}

}  // namespace sls
