#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sls/error.hpp"
#include "sls/link.hpp"
#include "sls/model.hpp"
#include "sls/parallel.hpp"
#include "sls/rng.hpp"

namespace sls {

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Gram inverse
// ---------------------------------------------------------------------------

enum class GramSource { Full, Subsampled };

/// Approximation of (X^T X)^{-1}. For a sub-sampled estimate this is
/// (|S|/n) (X_S^T X_S)^{-1}.
struct GramInverse {
    MatrixXd matrix;
    GramSource source = GramSource::Full;
    Index subsample_size = 0;  // |S|; equals n for Full
};

namespace detail {

/// Inverts a Gram matrix through its Cholesky factor. A pivot L(i,i)^2 at or
/// below 1e-12 * trace/p is treated as rank deficiency.
inline MatrixXd invert_gram(const MatrixXd& gram) {
    const Index p = gram.rows();
    const double threshold = 1e-12 * gram.trace() / static_cast<double>(p);
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw SingularGram("Gram matrix is not positive definite (rank-deficient design)");
    const MatrixXd& factor = llt.matrixLLT();
    for (Index i = 0; i < p; ++i) {
        double pivot = factor(i, i) * factor(i, i);
        if (!(pivot > threshold))
            throw SingularGram("Gram pivot " + std::to_string(i) + " is " +
                               std::to_string(pivot) + ", below the rank threshold");
    }
    MatrixXd inv = llt.solve(MatrixXd::Identity(p, p));
    return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

inline GramInverse gram_inverse_full(const MatrixXd& X) {
    if (X.rows() < X.cols()) throw DimensionMismatch("gram_inverse_full: need n >= p");
    MatrixXd gram = X.transpose() * X;
    return {detail::invert_gram(gram), GramSource::Full, X.rows()};
}

/// Sorted, distinct sample of `size` row indices out of [0, n), drawn by a
/// partial Fisher-Yates shuffle. For a fixed seed a smaller sample is a subset
/// of a larger one.
inline std::vector<Index> draw_subsample(Index n, Index size, std::uint64_t seed) {
    if (size < 0 || size > n) throw Error("draw_subsample: size must lie in [0, n]");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Engine rng = make_stream(seed, "subsample");
    for (Index i = 0; i < size; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    perm.resize(static_cast<std::size_t>(size));
    std::sort(perm.begin(), perm.end());
    return perm;
}

inline GramInverse gram_inverse_subsampled(const MatrixXd& X, std::span<const Index> subsample) {
    const Index n = X.rows();
    const Index m = static_cast<Index>(subsample.size());
    if (m < X.cols()) throw DimensionMismatch("gram_inverse_subsampled: need |S| >= p");

    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    bool identity_order = (m == n);
    for (Index i = 0; i < m; ++i) {
        Index r = subsample[static_cast<std::size_t>(i)];
        if (r < 0 || r >= n) throw Error("gram_inverse_subsampled: index out of range");
        if (seen[static_cast<std::size_t>(r)])
            throw Error("gram_inverse_subsampled: duplicate index " + std::to_string(r));
        seen[static_cast<std::size_t>(r)] = true;
        identity_order = identity_order && r == i;
    }

    MatrixXd gram;
    if (identity_order) {
        gram = X.transpose() * X;
    } else {
        MatrixXd xs(m, X.cols());
        for (Index i = 0; i < m; ++i) xs.row(i) = X.row(subsample[static_cast<std::size_t>(i)]);
        gram = xs.transpose() * xs;
    }
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    return {scale * detail::invert_gram(gram), GramSource::Subsampled, m};
}

/// ginv * X^T (z_col .* y)
inline VectorXd ols_direction(const GramInverse& ginv, const MatrixXd& X, const VectorXd& y,
                              const Eigen::Ref<const VectorXd>& z_col) {
    if (y.size() != X.rows() || z_col.size() != X.rows() || ginv.matrix.rows() != X.cols())
        throw DimensionMismatch("ols_direction: dimension mismatch");
    VectorXd response = z_col.cwiseProduct(y);
    VectorXd xty = X.transpose() * response;
    return ginv.matrix * xty;
}

// ---------------------------------------------------------------------------
// Scale equation  ell(c) = (c/n) sum_i f'(c * ytilde_i) = 1
// ---------------------------------------------------------------------------

inline double empirical_scale(double c, const Eigen::Ref<const VectorXd>& ytilde,
                              const LinkFunction& link) {
    const Index n = ytilde.size();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += link.d1(c * ytilde[i]);
    return c * sum / static_cast<double>(n);
}

/// d/dc of empirical_scale.
inline double empirical_scale_deriv(double c, const Eigen::Ref<const VectorXd>& ytilde,
                                    const LinkFunction& link) {
    const Index n = ytilde.size();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        double u = c * ytilde[i];
        sum += link.d1(u) + u * link.d2(u);
    }
    return sum / static_cast<double>(n);
}

struct RootOptions {
    double c_init = 1.0;
    double c_max = 1e6;  // search cap; beyond it the growth condition is taken as violated
    double tol = 1e-10;
    int max_iter = 100;
    double deriv_floor = 1e-12;

    void validate() const {
        if (!(c_max > 0) || !std::isfinite(c_max)) throw Error("root options: c_max must be positive");
        if (!(c_init > 0 && c_init <= c_max)) throw Error("root options: c_init must lie in (0, c_max]");
        if (!(tol > 0)) throw Error("root options: tol must be positive");
        if (max_iter < 1) throw Error("root options: max_iter must be >= 1");
        if (!(deriv_floor > 0)) throw Error("root options: deriv_floor must be positive");
    }
};

enum class RootFailure { None, NoRootInRange, NonFiniteScale, NotConverged };

inline const char* to_string(RootFailure f) {
    switch (f) {
        case RootFailure::None: return "none";
        case RootFailure::NoRootInRange: return "no_root_in_range";
        case RootFailure::NonFiniteScale: return "non_finite_scale";
        case RootFailure::NotConverged: return "not_converged";
    }
    return "?";
}

struct RootDiagnostics {
    int newton_iters = 0;
    int bisection_iters = 0;
    bool converged = false;
    bool used_bisection = false;
    double final_residual = std::numeric_limits<double>::quiet_NaN();
    // Bracket used by the bisection fallback; NaN when Newton converged.
    double bracket_lo = std::numeric_limits<double>::quiet_NaN();
    double bracket_hi = std::numeric_limits<double>::quiet_NaN();
    RootFailure failure = RootFailure::None;
    std::string message;
    // False when f' is unbounded (cubic, quintic): outside the regime the
    // error bounds cover, estimated anyway.
    bool link_regular = true;
};

struct RootResult {
    double c = std::numeric_limits<double>::quiet_NaN();
    RootDiagnostics diagnostics;
};

namespace detail {

/// ell(sign * c) - 1 as a function of c > 0.
class ScaleResidual {
public:
    ScaleResidual(const Eigen::Ref<const VectorXd>& ytilde, const LinkFunction& link, double sign)
        : ytilde_(ytilde), link_(link), sign_(sign) {}

    double operator()(double c) const {
        double v = empirical_scale(sign_ * c, ytilde_, link_) - 1.0;
        if (!std::isfinite(v))
            throw NonFiniteScale("empirical scale is not finite at c = " + std::to_string(sign_ * c));
        return v;
    }
    double deriv(double c) const { return sign_ * empirical_scale_deriv(sign_ * c, ytilde_, link_); }

private:
    const Eigen::Ref<const VectorXd>& ytilde_;
    const LinkFunction& link_;
    double sign_;
};

}  // namespace detail

/// Root of ell(c) - 1 on sign * (0, c_max]. Newton from c_init; on a stall
/// (tiny derivative, iterate leaving the interval, or max_iter) falls back to
/// bisection on the bracket nearest c_init found by doubling/halving. Options
/// and the search below are in terms of |c|.
inline RootResult newton_root(const Eigen::Ref<const VectorXd>& ytilde, const LinkFunction& link,
                              const RootOptions& opts = {}, int sign = 1) {
    opts.validate();
    if (sign != 1 && sign != -1) throw Error("newton_root: sign must be +1 or -1");
    if (!ytilde.allFinite()) throw Error("newton_root: ytilde has non-finite entries");

    const double s = sign;
    detail::ScaleResidual g(ytilde, link, s);
    RootResult out;
    auto& diag = out.diagnostics;
    diag.link_regular = link.has_regular_derivative();

    double c = opts.c_init;
    double gc = g(c);
    auto accept = [&](double root, double residual) {
        out.c = s * root;
        diag.final_residual = std::abs(residual);
        diag.converged = true;
        return out;
    };
    if (std::abs(gc) <= opts.tol) return accept(c, gc);

    while (diag.newton_iters < opts.max_iter) {
        double d = g.deriv(c);
        if (!std::isfinite(d) || std::abs(d) < opts.deriv_floor) break;
        double next = c - gc / d;
        ++diag.newton_iters;
        if (!(next > 0.0 && next <= opts.c_max)) break;
        c = next;
        gc = g(c);
        if (std::abs(gc) <= opts.tol) return accept(c, gc);
    }

    // Bisection fallback. ell(0) = 0, so the residual is -1 near zero; a
    // bracket is searched upward from c_init first, then downward.
    diag.used_bisection = true;
    double neg, pos, gneg, gpos;  // g(neg) < 0 < g(pos); either may be larger
    const double start = opts.c_init;
    const double gstart = g(start);
    if (std::abs(gstart) <= opts.tol) return accept(start, gstart);
    bool found = false;
    if (gstart < 0) {
        neg = start;
        gneg = gstart;
        double hi = start;
        while (hi < opts.c_max) {
            double next = std::min(2.0 * hi, opts.c_max);
            double gn = g(next);
            if (gn > 0) {
                pos = next;
                gpos = gn;
                found = true;
                break;
            }
            if (std::abs(gn) <= opts.tol) return accept(next, gn);
            neg = next;
            gneg = gn;
            hi = next;
        }
        if (!found) {
            // ell may be non-monotone: look for a positive residual below c_init.
            double lo = start, glo_prev = gstart;
            for (int i = 0; i < 1100 && lo > 0; ++i) {
                double next = 0.5 * lo;
                double gn = g(next);
                if (std::abs(gn) <= opts.tol) return accept(next, gn);
                if (gn > 0) {
                    pos = next;
                    gpos = gn;
                    neg = lo;
                    gneg = glo_prev;
                    found = true;
                    break;
                }
                lo = next;
                glo_prev = gn;
            }
        }
    } else {
        pos = start;
        gpos = gstart;
        double lo = start;
        for (int i = 0; i < 1100; ++i) {
            double next = 0.5 * lo;
            double gn = g(next);
            if (std::abs(gn) <= opts.tol) return accept(next, gn);
            if (gn < 0 || next == 0.0) {
                neg = next;
                gneg = gn;
                found = true;
                break;
            }
            pos = next;
            gpos = gn;
            lo = next;
        }
    }
    if (!found)
        throw NoRootInRange("ell(c) - 1 has no sign change on " + std::string(sign < 0 ? "-" : "") + "(0, " +
                            std::to_string(opts.c_max) + "]");
    diag.bracket_lo = std::min(s * neg, s * pos);
    diag.bracket_hi = std::max(s * neg, s * pos);

    for (;;) {
        double mid = 0.5 * (neg + pos);
        if (mid == neg || mid == pos) break;
        double gm = g(mid);
        ++diag.bisection_iters;
        if (std::abs(gm) <= opts.tol) return accept(mid, gm);
        if (gm < 0) {
            neg = mid;
            gneg = gm;
        } else {
            pos = mid;
            gpos = gm;
        }
    }
    // Bracket collapsed to adjacent doubles without meeting tol.
    bool take_neg = std::abs(gneg) <= std::abs(gpos);
    out.c = s * (take_neg ? neg : pos);
    diag.final_residual = std::abs(take_neg ? gneg : gpos);
    diag.failure = RootFailure::NotConverged;
    diag.message = "bisection exhausted floating-point resolution above tol";
    return out;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct FullGram {};

/// Sub-sampled Gram inverse. Exactly one of size / fraction should be set.
struct SubsampledGram {
    Index size = 0;
    double fraction = 0.0;

    Index resolve(Index n, Index p) const {
        Index m = size > 0 ? size : static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
        if (size <= 0 && !(fraction > 0 && fraction <= 1))
            throw Error("sub-sample fraction must lie in (0, 1]");
        return std::clamp(m, p, n);
    }
};

using GramOption = std::variant<FullGram, SubsampledGram>;

struct SlsOptions {
    GramOption gram = FullGram{};
    RootOptions root{};
    // Solve the scale equation on this many random rows (0 = all rows).
    Index root_subsample = 0;
    std::uint64_t seed = 0;  // drives S and the root sub-sample
    unsigned threads = 1;
};

struct EstimationResult {
    MatrixXd beta_ols;  // k x p
    VectorXd c_hat;     // k; NaN for failed directions
    MatrixXd beta_nlr;  // k x p; row j = c_hat[j] * beta_ols row j
    std::vector<RootDiagnostics> diagnostics;
    GramSource source = GramSource::Full;
    Index subsample_size = 0;

    bool all_converged() const {
        return std::all_of(diagnostics.begin(), diagnostics.end(),
                           [](const RootDiagnostics& d) { return d.converged; });
    }
};

/// Scaled least squares: one shared Gram inverse, then per direction an OLS
/// fit on z_j * y, a root of the scale equation, and the rescaled OLS vector.
/// A direction whose root search fails is marked in its diagnostics; the
/// others are unaffected.
inline EstimationResult sls_estimate(const Dataset& data, std::span<const LinkFunction> links,
                                     const SlsOptions& options = {}) {
    data.validate();
    options.root.validate();
    const Index n = data.n(), p = data.p(), k = data.k();
    if (static_cast<Index>(links.size()) != k)
        throw DimensionMismatch("sls_estimate: number of links (" + std::to_string(links.size()) +
                                ") must equal the columns of Z (" + std::to_string(k) + ")");

    GramInverse ginv;
    if (std::holds_alternative<FullGram>(options.gram)) {
        ginv = gram_inverse_full(data.X);
    } else {
        Index m = std::get<SubsampledGram>(options.gram).resolve(n, p);
        auto rows = draw_subsample(n, m, derive_seed(options.seed, 1));
        ginv = gram_inverse_subsampled(data.X, rows);
    }

    std::vector<Index> root_rows;
    if (options.root_subsample > 0 && options.root_subsample < n)
        root_rows = draw_subsample(n, options.root_subsample, derive_seed(options.seed, 2));

    EstimationResult result;
    result.beta_ols.resize(k, p);
    result.beta_nlr.resize(k, p);
    result.c_hat = VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    result.diagnostics.resize(static_cast<std::size_t>(k));
    result.source = ginv.source;
    result.subsample_size = ginv.subsample_size;

    parallel_for(static_cast<std::size_t>(k), options.threads, [&](std::size_t jj) {
        const Index j = static_cast<Index>(jj);
        const LinkFunction& link = links[jj];
        VectorXd beta = ols_direction(ginv, data.X, data.y, data.Z.col(j));
        result.beta_ols.row(j) = beta.transpose();

        RootDiagnostics& diag = result.diagnostics[jj];
        diag.link_regular = link.has_regular_derivative();
        if ((beta.array() == 0.0).all()) {
            diag.failure = RootFailure::NoRootInRange;
            diag.message = "OLS direction is identically zero; the scale equation is degenerate";
        } else {
            VectorXd ytilde;
            if (root_rows.empty()) {
                ytilde = data.X * beta;
            } else {
                ytilde.resize(static_cast<Index>(root_rows.size()));
                for (std::size_t i = 0; i < root_rows.size(); ++i)
                    ytilde[static_cast<Index>(i)] = data.X.row(root_rows[i]).dot(beta);
            }
            try {
                RootResult root = newton_root(ytilde, link, options.root, link.derivative_sign());
                diag = root.diagnostics;
                if (diag.converged) result.c_hat[j] = root.c;
            } catch (const NoRootInRange& e) {
                diag.used_bisection = true;
                diag.failure = RootFailure::NoRootInRange;
                diag.message = e.what();
            } catch (const NonFiniteScale& e) {
                diag.failure = RootFailure::NonFiniteScale;
                diag.message = e.what();
            }
        }
        result.beta_nlr.row(j) = result.c_hat[j] * result.beta_ols.row(j);
    });
    return result;
}

}  // namespace sls
