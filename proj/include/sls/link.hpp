#pragma once

#include <cmath>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>

#include "sls/error.hpp"

namespace sls {

enum class LinkFamily { Identity, Monomial, Sigmoid, Logistic };

/// Link kind. `degree` is meaningful only for Monomial and is always odd.
struct LinkKind {
    LinkFamily family = LinkFamily::Identity;
    int degree = 1;

    static LinkKind identity() { return {LinkFamily::Identity, 1}; }
    static LinkKind sigmoid() { return {LinkFamily::Sigmoid, 1}; }
    static LinkKind logistic() { return {LinkFamily::Logistic, 1}; }
    static LinkKind monomial(int degree) {
        if (degree < 1 || degree % 2 == 0)
            throw Error("monomial degree must be odd and >= 1, got " + std::to_string(degree));
        return {LinkFamily::Monomial, degree};
    }

    friend bool operator==(const LinkKind&, const LinkKind&) = default;
};

inline std::string to_string(const LinkKind& kind) {
    switch (kind.family) {
        case LinkFamily::Identity: return "identity";
        case LinkFamily::Monomial: return "monomial:" + std::to_string(kind.degree);
        case LinkFamily::Sigmoid: return "sigmoid";
        case LinkFamily::Logistic: return "logistic";
    }
    return "?";
}

/// Parses "identity", "monomial:<d>", "sigmoid" or "logistic".
inline LinkKind parse_link_kind(std::string_view name) {
    if (name == "identity") return LinkKind::identity();
    if (name == "sigmoid") return LinkKind::sigmoid();
    if (name == "logistic") return LinkKind::logistic();
    constexpr std::string_view prefix = "monomial:";
    if (name.starts_with(prefix)) {
        auto digits = name.substr(prefix.size());
        int degree = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), degree);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty())
            throw Error("bad monomial degree in link '" + std::string(name) + "'");
        return LinkKind::monomial(degree);
    }
    throw Error("unknown link '" + std::string(name) + "'");
}

namespace detail {

inline double ipow(double z, int d) {
    double r = 1.0;
    for (int i = 0; i < d; ++i) r *= z;
    return r;
}

}  // namespace detail

/// A known link f with analytic f' and f''.
///
/// Exp-based links branch on the sign of z and only ever evaluate exp(-|z|),
/// so no intermediate overflows for any finite z.
class LinkFunction {
public:
    LinkFunction() = default;
    explicit LinkFunction(LinkKind kind) : kind_(kind) {
        if (kind_.family == LinkFamily::Monomial) kind_ = LinkKind::monomial(kind_.degree);
    }

    static LinkFunction identity() { return LinkFunction(LinkKind::identity()); }
    static LinkFunction sigmoid() { return LinkFunction(LinkKind::sigmoid()); }
    static LinkFunction logistic() { return LinkFunction(LinkKind::logistic()); }
    static LinkFunction monomial(int d) { return LinkFunction(LinkKind::monomial(d)); }
    static LinkFunction parse(std::string_view name) { return LinkFunction(parse_link_kind(name)); }

    const LinkKind& kind() const { return kind_; }
    std::string name() const { return to_string(kind_); }

    double eval(double z) const {
        switch (kind_.family) {
            case LinkFamily::Identity: return z;
            case LinkFamily::Monomial: return detail::ipow(z, kind_.degree);
            case LinkFamily::Sigmoid: {
                double t = std::exp(-std::abs(z));
                return z >= 0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
            }
            case LinkFamily::Logistic: {
                // log(1 + e^{-z})
                double t = std::exp(-std::abs(z));
                return z >= 0 ? std::log1p(t) : -z + std::log1p(t);
            }
        }
        return 0.0;
    }

    double d1(double z) const {
        switch (kind_.family) {
            case LinkFamily::Identity: return 1.0;
            case LinkFamily::Monomial:
                return kind_.degree * detail::ipow(z, kind_.degree - 1);
            case LinkFamily::Sigmoid: {
                double t = std::exp(-std::abs(z));
                double s = 1.0 + t;
                return t / (s * s);
            }
            case LinkFamily::Logistic: {
                // -1 / (1 + e^z)
                double t = std::exp(-std::abs(z));
                return z >= 0 ? -t / (1.0 + t) : -1.0 / (1.0 + t);
            }
        }
        return 0.0;
    }

    double d2(double z) const {
        switch (kind_.family) {
            case LinkFamily::Identity: return 0.0;
            case LinkFamily::Monomial:
                if (kind_.degree < 2) return 0.0;
                return kind_.degree * (kind_.degree - 1) * detail::ipow(z, kind_.degree - 2);
            case LinkFamily::Sigmoid: {
                // odd: sign(z) * t (t - 1) / (1 + t)^3 with t = e^{-|z|}
                double t = std::exp(-std::abs(z));
                double s = 1.0 + t;
                double v = t * (t - 1.0) / (s * s * s);
                return z >= 0 ? v : -v;
            }
            case LinkFamily::Logistic: {
                double t = std::exp(-std::abs(z));
                double s = 1.0 + t;
                return t / (s * s);
            }
        }
        return 0.0;
    }

    /// Bound L on |f'|, when finite.
    std::optional<double> bound_d1() const {
        switch (kind_.family) {
            case LinkFamily::Identity: return 1.0;
            case LinkFamily::Monomial:
                if (kind_.degree == 1) return 1.0;
                return std::nullopt;
            case LinkFamily::Sigmoid: return 0.25;
            case LinkFamily::Logistic: return 1.0;
        }
        return std::nullopt;
    }

    /// Lipschitz constant G of f', when finite.
    std::optional<double> lipschitz_d1() const {
        switch (kind_.family) {
            case LinkFamily::Identity: return 0.0;
            case LinkFamily::Monomial:
                if (kind_.degree == 1) return 0.0;
                return std::nullopt;
            case LinkFamily::Sigmoid: return 1.0 / (6.0 * std::sqrt(3.0));
            case LinkFamily::Logistic: return 0.25;
        }
        return std::nullopt;
    }

    /// Sign of f' where it is constant: -1 for logistic, +1 otherwise. The
    /// population scale 1 / E[f'] carries this sign.
    int derivative_sign() const { return kind_.family == LinkFamily::Logistic ? -1 : 1; }

    /// True when f' is bounded and Lipschitz, i.e. the link meets the
    /// regularity the error bounds assume. Cubic and quintic links do not.
    bool has_regular_derivative() const { return bound_d1() && lipschitz_d1(); }

private:
    LinkKind kind_{};
};

}  // namespace sls
