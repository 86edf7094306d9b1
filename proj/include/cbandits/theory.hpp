#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "confidence.hpp"

namespace cbandits {

// ---------------------------------------------------------------- gaps

/// Gap seen by the lower bounds: Delta (1 - eps) - 2 eps sigma.
inline double corrupted_gap(double delta, double sigma, double eps) {
    return delta * (1.0 - eps) - 2.0 * eps * sigma;
}

/// (Delta - 2b)(p - eps) - coef * beta * eps. The HuberUCB bound uses coef = 8.
inline double shifted_gap(double delta, double bias, double p, double beta, double eps,
                          double beta_coef = 8.0) {
    return (delta - 2.0 * bias) * (p - eps) - beta_coef * beta * eps;
}

/// Delta (p - eps) - coef * sigma * eps, the form used by the simplified bounds (coef = 32).
inline double simplified_shifted_gap(double delta, double sigma, double p, double eps,
                                     double sigma_coef = 32.0) {
    return delta * (p - eps) - sigma_coef * sigma * eps;
}

// ---------------------------------------------------------------- KL

/// sum p ln(p / q) over a common finite support.
inline double kl_numeric_discrete(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) {
        throw std::invalid_argument("kl_numeric_discrete: support mismatch");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw std::invalid_argument("kl_numeric_discrete: negative probability");
        }
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) {
            throw std::invalid_argument("kl_numeric_discrete: q vanishes where p does not");
        }
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

/// KL upper bound between two unit-scale Student laws whose locations differ by delta.
inline double kl_student_bound(double d, double delta) {
    if (!(d > 1.0)) {
        throw std::domain_error("kl_student_bound requires d > 1");
    }
    if (!(delta >= 0.0)) {
        throw std::domain_error("kl_student_bound requires delta >= 0");
    }
    const double c = (d + 1.0) * (d + 1.0) / (5.0 * std::sqrt(d));
    if (delta <= 1.0) {
        return std::pow(3.0, d - 1.0) * c * delta * delta;
    }
    return (d + 1.0) * std::log(delta) + std::log(std::pow(3.0, d) * c);
}

/// Two laws on {0, 1}, probabilities listed as (P(0), P(1)).
struct TwoPointPair {
    std::vector<double> q0;
    std::vector<double> q1;
    double alpha = 0.0;
    double eps = 0.0;
    double delta = 0.0;  // gap of the uncorrupted pair, 1 - 2 alpha
    double sigma = 0.0;  // common std of the uncorrupted pair
};

/*
 * P0 = Ber(alpha), P1 = Ber(1 - alpha); Q0 pushes eps of mass to 1 and Q1
 * pushes eps of mass to 0, so corruption works against telling them apart.
 */
inline TwoPointPair corrupted_bernoulli_pair(double alpha, double eps) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::domain_error("corrupted_bernoulli_pair requires alpha in (0, 0.5)");
    }
    if (!(eps >= 0.0 && eps < 0.5)) {
        throw std::domain_error("corrupted_bernoulli_pair requires eps in [0, 0.5)");
    }
    const double a = (1.0 - eps) * (1.0 - alpha);
    TwoPointPair out;
    out.q0 = {a, 1.0 - a};
    out.q1 = {1.0 - a, a};
    out.alpha = alpha;
    out.eps = eps;
    out.delta = 1.0 - 2.0 * alpha;
    out.sigma = std::sqrt(alpha * (1.0 - alpha));
    return out;
}

inline double kl_corrupted_bernoulli_exact(double alpha, double eps) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::domain_error("kl_corrupted_bernoulli_exact requires alpha in (0, 0.5)");
    }
    if (!(eps >= 0.0 && eps < 0.5)) {
        throw std::domain_error("kl_corrupted_bernoulli_exact requires eps in [0, 0.5)");
    }
    const double a = 1.0 - 2.0 * eps - 2.0 * alpha + 2.0 * eps * alpha;
    const double b = eps + alpha - eps * alpha;
    return a * std::log1p(a / b);
}

/// The pair is defined up to a scale on its support, so only Delta / sigma
/// matters; this inverts Delta / sigma = (1 - 2a) / sqrt(a (1 - a)) for a.
inline double bernoulli_alpha_for_ratio(double delta, double sigma) {
    if (!(sigma > 0.0) || !(delta >= 0.0)) {
        throw std::domain_error("bernoulli_alpha_for_ratio requires sigma > 0, delta >= 0");
    }
    const double r = delta / sigma;
    return 0.5 * (1.0 - r / std::sqrt(4.0 + r * r));
}

/// Exact KL of the corrupted pair with the given gap and standard deviation.
inline double kl_corrupted_bernoulli_exact_gap(double delta, double sigma, double eps) {
    const double alpha = bernoulli_alpha_for_ratio(delta, sigma);
    if (alpha >= 0.5) {
        return 0.0;
    }
    if (alpha <= 0.0) {
        throw std::domain_error("gap too large relative to sigma for a Bernoulli pair");
    }
    return kl_corrupted_bernoulli_exact(alpha, eps);
}

struct KlBounds {
    double uniform = 0.0;
    /// (Dbar / 2 sigma) ln(1 + 2 Dbar / (2 sigma - Dbar)), the form derived for the construction.
    std::optional<double> high_regime;
    /// (Dbar / 2 sigma) ln(1 + Dbar / (2 sigma - Dbar)), as the lemma is usually quoted.
    std::optional<double> high_regime_stated;
    bool low_regime = false;
};

inline double low_regime_threshold(double sigma, double eps) {
    return 2.0 * sigma * eps / std::sqrt(1.0 - 2.0 * eps);
}

inline KlBounds kl_corrupted_bernoulli_bounds(double delta, double sigma, double eps) {
    if (!(sigma > 0.0)) {
        throw std::domain_error("kl_corrupted_bernoulli_bounds requires sigma > 0");
    }
    if (!(eps > 0.0 && eps < 0.5)) {
        throw std::domain_error("kl_corrupted_bernoulli_bounds requires eps in (0, 0.5)");
    }
    if (!(delta >= 0.0)) {
        throw std::domain_error("kl_corrupted_bernoulli_bounds requires delta >= 0");
    }
    KlBounds out;
    out.uniform = (1.0 - 2.0 * eps) * std::log1p((1.0 - 2.0 * eps) / eps);
    const double low = low_regime_threshold(sigma, eps);
    out.low_regime = delta <= low;
    if (delta > low && delta < 2.0 * sigma) {
        const double g = corrupted_gap(delta, sigma, eps);
        const double ratio = g / (2.0 * sigma - g);
        out.high_regime = g / (2.0 * sigma) * std::log1p(2.0 * ratio);
        out.high_regime_stated = g / (2.0 * sigma) * std::log1p(ratio);
    }
    return out;
}

// ---------------------------------------------------------------- lower bounds

/// Coefficient of ln n in the lower bound on suboptimal pulls, Student family.
inline double lower_bound_pulls_student(double delta, double sigma) {
    if (!(delta > 0.0) || !(sigma > 0.0)) {
        throw std::domain_error("lower_bound_pulls_student requires delta, sigma > 0");
    }
    const double first = sigma * sigma / (51.0 * delta * delta);
    const double denom = 4.0 * std::log(delta / sigma) + 22.0;
    // The second term only means something while its denominator is positive.
    return denom > 0.0 ? std::max(first, 1.0 / denom) : first;
}

/// Coefficient of ln n for corrupted Bernoulli arms. +inf marks the regime
/// where some corruption makes the arms indistinguishable.
inline double lower_bound_pulls_bernoulli(double delta, double sigma, double eps) {
    if (!(delta > 0.0) || !(sigma > 0.0)) {
        throw std::domain_error("lower_bound_pulls_bernoulli requires delta, sigma > 0");
    }
    if (!(eps >= 0.0 && eps < 0.5)) {
        throw std::domain_error("lower_bound_pulls_bernoulli requires eps in [0, 0.5)");
    }
    if (delta >= 2.0 * sigma) {
        if (eps == 0.0) return 0.0;
        return 1.0 / ((1.0 - 2.0 * eps) * std::log((1.0 - eps) / eps));
    }
    if (delta <= low_regime_threshold(sigma, eps)) {
        return infinity;
    }
    const double g = corrupted_gap(delta, sigma, eps);
    return 2.0 * sigma / (g * std::log1p(g / (2.0 * sigma - g)));
}

// ---------------------------------------------------------------- upper bounds

namespace detail {

inline double forced_exploration_constant(const HuberConfig& cfg) {
    const double floor_eps_bar = 9.0 / (14.0 * std::numbers::sqrt2);
    const double k = 1.0 + 2.0 * std::numbers::sqrt2 * std::max(cfg.eps_bar(), floor_eps_bar);
    const double gap = cfg.p() - 5.0 * cfg.eps();
    return 4.0 / (gap * gap) * k * k;
}

inline double log_horizon(std::size_t n) {
    if (n == 0) {
        throw std::domain_error("upper bounds require n >= 1");
    }
    return std::log(static_cast<double>(n));
}

}  // namespace detail

/// Threshold on the shifted gap separating the two HuberUCB regimes.
inline double huberucb_regime_threshold(const HuberConfig& cfg) {
    const double s = cfg.sigma();
    const double b = cfg.beta();
    const double k = std::numbers::sqrt2 + 2.0 * (b / s) * cfg.eps_bar();
    return 12.0 * s * s / b * k * k;
}

/// Bound on E[T_i(n)] for HuberUCB with the arm's config and gap.
inline double upper_bound_pulls_huberucb(std::size_t n, double delta, const HuberConfig& cfg,
                                         double beta_coef = 8.0) {
    const double L = detail::log_horizon(n);
    const double g = shifted_gap(delta, cfg.bias(), cfg.p(), cfg.beta(), cfg.eps(), beta_coef);
    if (!(g > 0.0)) {
        throw std::domain_error("upper_bound_pulls_huberucb: shifted gap must be positive");
    }
    const double a = detail::forced_exploration_constant(cfg);
    const double s = cfg.sigma();
    const double b = cfg.beta();
    double main;
    if (g > huberucb_regime_threshold(cfg)) {
        main = 32.0 * b / (3.0 * g);
    } else {
        const double k = std::numbers::sqrt2 + 2.0 * (b / s) * cfg.eps_bar();
        main = 50.0 * s * s / (9.0 * g * g) * k * k;
    }
    return L * std::max(main, a) + 10.0 * (L + 1.0);
}

/// Explicit-constant HuberUCB bound for beta = 4 sigma, symmetric arms, eps < 1/10.
inline double upper_bound_pulls_huberucb_simplified(std::size_t n, double delta, double sigma,
                                                    double eps, double p) {
    if (!(eps >= 0.0 && eps < 0.1)) {
        throw std::domain_error("simplified HuberUCB bound requires eps in [0, 0.1)");
    }
    if (!(sigma > 0.0)) {
        throw std::domain_error("simplified HuberUCB bound requires sigma > 0");
    }
    const double L = detail::log_horizon(n);
    const double g = simplified_shifted_gap(delta, sigma, p, eps);
    if (!(g > 0.0)) {
        throw std::domain_error("simplified HuberUCB bound: shifted gap must be positive");
    }
    const double eb = eps_bar(eps);
    const double k = 1.0 + 4.0 * std::numbers::sqrt2 * eb;
    if (g > 6.0 * sigma * k * k) {
        return 43.0 * L * std::max(sigma / g, 10.0) + 10.0 * (L + 1.0);
    }
    return 23.0 * L * std::max(sigma * sigma / (g * g) * (1.0 + 32.0 * eb * eb), 18.0) +
           10.0 * (L + 1.0);
}

/// Explicit-constant SeqHuberUCB bound.
inline double upper_bound_pulls_seqhuberucb(std::size_t n, double delta, double sigma, double eps,
                                            double p) {
    if (!(eps >= 0.0 && eps < 0.5)) {
        throw std::domain_error("SeqHuberUCB bound requires eps in [0, 0.5)");
    }
    if (!(sigma > 0.0)) {
        throw std::domain_error("SeqHuberUCB bound requires sigma > 0");
    }
    const double L = detail::log_horizon(n);
    const double g = simplified_shifted_gap(delta, sigma, p, eps);
    if (!(g > 0.0)) {
        throw std::domain_error("SeqHuberUCB bound: shifted gap must be positive");
    }
    const double eb = eps_bar(eps);
    const double k = 1.0 + 4.0 * std::numbers::sqrt2 * eb;
    if (g > 18.0 * sigma * k * k) {
        return 128.0 * L * std::max(sigma / g, 2.0) + 28.0 * (L + 1.0);
    }
    return 80.0 * L * std::max(sigma * sigma / (g * g) * (1.0 + 32.0 * eb * eb), 3.0) +
           28.0 * (L + 1.0);
}

// ---------------------------------------------------------------- regret

/// sum_i Delta_i T_i.
inline double regret_decomposition(std::span<const double> gaps, std::span<const double> pulls) {
    if (gaps.size() != pulls.size()) {
        throw std::invalid_argument("regret_decomposition: length mismatch");
    }
    double r = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (gaps[i] < 0.0) {
            throw std::invalid_argument("regret_decomposition: negative gap");
        }
        r += gaps[i] * pulls[i];
    }
    return r;
}

}  // namespace cbandits
