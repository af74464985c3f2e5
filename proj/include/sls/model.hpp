#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sls/error.hpp"
#include "sls/link.hpp"

namespace sls {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Model y = sum_j z_j f_j(<beta*_j, x>) + eps.
struct ModelSpec {
    Eigen::Index p = 0;
    std::vector<LinkFunction> links;
    std::optional<MatrixXd> beta_star;  // k x p, rows are beta*_j
    double noise_std = 1.0;

    Eigen::Index k() const { return static_cast<Eigen::Index>(links.size()); }

    void validate() const {
        if (p <= 0) throw Error("model: p must be positive");
        if (links.empty()) throw Error("model: at least one link is required");
        if (beta_star && (beta_star->rows() != k() || beta_star->cols() != p))
            throw DimensionMismatch("model: beta_star must be k x p");
        if (!(noise_std >= 0)) throw Error("model: noise_std must be >= 0");
    }
};

struct Dataset {
    MatrixXd X;  // n x p
    MatrixXd Z;  // n x k
    VectorXd y;  // n

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index k() const { return Z.cols(); }

    void validate() const {
        if (Z.rows() != X.rows() || y.size() != X.rows())
            throw DimensionMismatch("dataset: X, Z and y must have the same number of rows");
        if (n() < p())
            throw Error("dataset: need n >= p (n=" + std::to_string(n()) + ", p=" +
                        std::to_string(p()) + ")");
        if (!X.allFinite() || !Z.allFinite() || !y.allFinite())
            throw Error("dataset: non-finite entries");
    }
};

/// sum_j z_j f_j(<beta*_j, x>) + eps, with the inner products accumulated left to right.
inline double response(const ModelSpec& spec, const Eigen::Ref<const VectorXd>& x,
                       const Eigen::Ref<const VectorXd>& z, double eps) {
    if (!spec.beta_star) throw Error("response: model has no ground-truth beta_star");
    const MatrixXd& beta = *spec.beta_star;
    if (x.size() != spec.p || z.size() != spec.k())
        throw DimensionMismatch("response: x must have length p and z length k");
    double y = 0.0;
    for (Eigen::Index j = 0; j < spec.k(); ++j) {
        double u = 0.0;
        for (Eigen::Index t = 0; t < spec.p; ++t) u += beta(j, t) * x[t];
        y += z[j] * spec.links[static_cast<std::size_t>(j)].eval(u);
    }
    return y + eps;
}

}  // namespace sls
