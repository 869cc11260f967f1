#pragma once

// Convex losses L(y, t) of a response y and a prediction t, each locally
// Lipschitz in t.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "rkhs_sparse/error.hpp"

namespace rkhs_sparse {

enum class LossKind { square, check, eps_insensitive, logistic, hinge };

enum class LabelConvention { real_valued, signs };

struct LossSpec {
    LossKind kind = LossKind::square;
    double tau = 0.5;      // check only
    double epsilon = 0.1;  // eps_insensitive only

    static LossSpec square() { return {LossKind::square}; }
    static LossSpec check(double tau) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw InvalidArgument("check loss needs tau in (0, 1)");
        }
        return {LossKind::check, tau};
    }
    static LossSpec eps_insensitive(double epsilon) {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw InvalidArgument("eps-insensitive loss needs epsilon > 0");
        }
        return {LossKind::eps_insensitive, 0.5, epsilon};
    }
    static LossSpec logistic() { return {LossKind::logistic}; }
    static LossSpec hinge() { return {LossKind::hinge}; }

    /// Exponent q of the growth bound L(y, t) <= c (|y|^q + |t|^q).
    int growth_order() const { return kind == LossKind::square ? 2 : 1; }

    LabelConvention label_convention() const {
        return (kind == LossKind::logistic || kind == LossKind::hinge) ? LabelConvention::signs
                                                                      : LabelConvention::real_valued;
    }
};

inline std::string_view loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::square: return "square";
        case LossKind::check: return "check";
        case LossKind::eps_insensitive: return "eps";
        case LossKind::logistic: return "logistic";
        case LossKind::hinge: return "hinge";
    }
    return "unknown";
}

inline LossKind parse_loss_kind(std::string_view name) {
    if (name == "square") return LossKind::square;
    if (name == "check") return LossKind::check;
    if (name == "eps" || name == "eps_insensitive") return LossKind::eps_insensitive;
    if (name == "logistic") return LossKind::logistic;
    if (name == "hinge") return LossKind::hinge;
    throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

inline bool is_smooth(const LossSpec& spec) {
    return spec.kind == LossKind::square || spec.kind == LossKind::logistic;
}

inline bool label_conforms(const LossSpec& spec, double y) {
    if (!std::isfinite(y)) {
        return false;
    }
    return spec.label_convention() == LabelConvention::real_valued || y == 1.0 || y == -1.0;
}

inline void require_label(const LossSpec& spec, double y) {
    if (!label_conforms(spec, y)) {
        throw InvalidArgument(std::string(loss_name(spec.kind)) + " loss needs " +
                              (spec.label_convention() == LabelConvention::signs ? "labels in {-1, +1}"
                                                                                 : "finite responses") +
                              ", got " + std::to_string(y));
    }
}

namespace detail {

inline constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

/// log(1 + exp(-z)) without overflow.
inline double log1p_exp_neg(double z) {
    return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

/// 1 / (1 + exp(z)).
inline double logistic_tail(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

// Unchecked kernels used inside solver loops, where labels are validated once.

inline double loss_value_unchecked(const LossSpec& spec, double y, double t) {
    switch (spec.kind) {
        case LossKind::square: return (y - t) * (y - t);
        case LossKind::check: return (y - t) * (spec.tau - (y < t ? 1.0 : 0.0));
        case LossKind::eps_insensitive: return std::max(0.0, std::abs(y - t) - spec.epsilon);
        case LossKind::logistic: return kInvLn2 * log1p_exp_neg(y * t);
        case LossKind::hinge: return std::max(0.0, 1.0 - y * t);
    }
    return 0.0;
}

inline double loss_subgradient_unchecked(const LossSpec& spec, double y, double t) {
    switch (spec.kind) {
        case LossKind::square: return 2.0 * (t - y);
        case LossKind::check:
            if (t < y) return -spec.tau;
            if (t > y) return 1.0 - spec.tau;
            return 0.0;
        case LossKind::eps_insensitive: {
            const double r = t - y;
            if (r > spec.epsilon) return 1.0;
            if (r < -spec.epsilon) return -1.0;
            return 0.0;
        }
        case LossKind::logistic: return -y * kInvLn2 * logistic_tail(y * t);
        case LossKind::hinge: return y * t < 1.0 ? -y : 0.0;
    }
    return 0.0;
}

}  // namespace detail

inline double loss_value(const LossSpec& spec, double y, double t) {
    require_label(spec, y);
    if (!std::isfinite(t)) {
        throw InvalidArgument("loss evaluated at a non-finite prediction");
    }
    return detail::loss_value_unchecked(spec, y, t);
}

/// One element of the subdifferential of t -> L(y, t). At kinks every loss
/// here admits 0, and 0 is returned.
inline double loss_subgradient(const LossSpec& spec, double y, double t) {
    require_label(spec, y);
    if (!std::isfinite(t)) {
        throw InvalidArgument("loss evaluated at a non-finite prediction");
    }
    return detail::loss_subgradient_unchecked(spec, y, t);
}

/// Lipschitz constant of t -> L(y, t) on [-R, R] for |y| <= y_bound.
inline double local_lipschitz_constant(const LossSpec& spec, double y_bound, double R) {
    switch (spec.kind) {
        case LossKind::square: return 2.0 * (y_bound + R);
        case LossKind::logistic: return detail::kInvLn2 * std::exp(R) / (1.0 + std::exp(R));
        case LossKind::check:
        case LossKind::eps_insensitive:
        case LossKind::hinge: return 1.0;
    }
    return 0.0;
}

}  // namespace rkhs_sparse
