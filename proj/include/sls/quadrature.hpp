#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sls/error.hpp"

namespace sls {

/// Gauss-Hermite rule for expectations under the standard normal:
/// E[g(W)] ~= sum_i weights[i] * g(nodes[i]).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    /// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    /// polynomials (off-diagonal sqrt(i)); weights are squared first
    /// eigenvector components and sum to one.
    explicit GaussHermite(int order) {
        if (order < 1) throw Error("GaussHermite: order must be >= 1");
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
        for (int i = 1; i < order; ++i) {
            double b = std::sqrt(static_cast<double>(i));
            jacobi(i, i - 1) = b;
            jacobi(i - 1, i) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
        nodes.resize(static_cast<std::size_t>(order));
        weights.resize(static_cast<std::size_t>(order));
        for (int i = 0; i < order; ++i) {
            nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
            double v = eig.eigenvectors()(0, i);
            weights[static_cast<std::size_t>(i)] = v * v;
        }
    }

    template <typename F>
    double expect(F&& g) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * g(nodes[i]);
        return sum;
    }
};

}  // namespace sls
