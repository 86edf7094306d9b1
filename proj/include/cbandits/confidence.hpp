#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimators.hpp"

namespace cbandits {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// sqrt((1 - 2 eps) / ln((1 - eps) / eps)), with the value 0 at eps = 0.
inline double eps_bar(double eps) {
    if (!(eps >= 0.0 && eps < 0.5)) {
        throw std::domain_error("eps_bar requires eps in [0, 0.5)");
    }
    if (eps == 0.0) {
        return 0.0;
    }
    return std::sqrt((1.0 - 2.0 * eps) / std::log((1.0 - eps) / eps));
}

/// Chebyshev lower bound on P(|Y - E Y| <= beta / 2).
inline double p_chebyshev(double sigma, double beta) {
    if (!(beta > 0.0)) {
        throw std::domain_error("p_chebyshev requires beta > 0");
    }
    return std::max(0.0, 1.0 - 4.0 * sigma * sigma / (beta * beta));
}

/// Per-arm parameters of the Huber confidence bounds.
class HuberConfig {
public:
    HuberConfig(double beta, double sigma, double eps, double p, double bias = 0.0)
        : beta_(beta), sigma_(sigma), eps_(eps), p_(p), bias_(bias) {
        if (!(beta > 0.0) || !std::isfinite(beta)) {
            throw std::invalid_argument("HuberConfig: beta must be positive");
        }
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw std::invalid_argument("HuberConfig: sigma must be positive");
        }
        if (!(eps >= 0.0 && eps < 0.5)) {
            throw std::invalid_argument("HuberConfig: eps must lie in [0, 0.5)");
        }
        if (!(p > 0.0 && p <= 1.0)) {
            throw std::invalid_argument("HuberConfig: p must lie in (0, 1]");
        }
        if (!(p > 5.0 * eps)) {
            throw std::invalid_argument("HuberConfig: concentration needs p > 5 eps (p=" +
                                        std::to_string(p) + ", eps=" + std::to_string(eps) + ")");
        }
        if (!(bias >= 0.0)) {
            throw std::invalid_argument("HuberConfig: bias bound must be nonnegative");
        }
        eps_bar_ = cbandits::eps_bar(eps);
    }

    double beta() const noexcept { return beta_; }
    double sigma() const noexcept { return sigma_; }
    double eps() const noexcept { return eps_; }
    double p() const noexcept { return p_; }
    double bias() const noexcept { return bias_; }
    double eps_bar() const noexcept { return eps_bar_; }

    /// Conditions under which the concentration guarantee is proven but which
    /// are deliberately not enforced (small beta is used in practice).
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (beta_ < 4.0 * sigma_) {
            out.push_back("beta < 4 sigma: concentration guarantee not covered");
        }
        return out;
    }

private:
    double beta_;
    double sigma_;
    double eps_;
    double p_;
    double bias_;
    double eps_bar_ = 0.0;
};

namespace detail {

// Radius written in terms of L = ln(1/delta) so that delta = t^-2 never underflows.
inline double radius_from_log(double n, double log_inv_delta, const HuberConfig& cfg) {
    const double L = log_inv_delta;
    const double denom = cfg.p() - std::sqrt(L / (2.0 * n)) - cfg.eps();
    if (!(denom > 0.0)) {
        return infinity;
    }
    const double numer = cfg.sigma() * std::sqrt(2.0 * L / n) + cfg.beta() * L / (3.0 * n) +
                         2.0 * cfg.beta() * cfg.eps_bar() * std::sqrt(L / n) +
                         2.0 * cfg.beta() * cfg.eps();
    return numer / denom;
}

inline double delta_min_exponent(const HuberConfig& cfg) {
    const double gap = cfg.p() - 5.0 * cfg.eps();
    const double k = 1.0 + 2.0 * std::numbers::sqrt2 * cfg.eps_bar();
    return 128.0 * gap * gap / (49.0 * k * k);
}

inline double log_inv_delta_min(double n, const HuberConfig& cfg) {
    return n * delta_min_exponent(cfg);
}

}  // namespace detail

/// Smallest admissible confidence level for n samples.
inline double delta_min(std::size_t n, const HuberConfig& cfg) {
    if (n == 0) {
        throw std::domain_error("delta_min requires n >= 1");
    }
    return std::exp(-static_cast<double>(n) * detail::delta_min_exponent(cfg));
}

/// High-probability deviation radius of the empirical Huber estimate around
/// the inlier Huber functional. +inf when the denominator vanishes or delta
/// is below delta_min(n).
inline double radius_rn(std::size_t n, double delta, const HuberConfig& cfg) {
    if (n == 0) {
        throw std::domain_error("radius_rn requires n >= 1");
    }
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw std::domain_error("radius_rn requires delta in (0, 1]");
    }
    const double L = -std::log(delta);
    const double nn = static_cast<double>(n);
    if (L > detail::log_inv_delta_min(nn, cfg)) {
        return infinity;
    }
    return detail::radius_from_log(nn, L, cfg);
}

/// Deviation radius of the sequential estimate: r_n plus the linearization
/// correction, which is proportional to the radius at the last anchor.
inline double seqhub_radius_rn(std::size_t n, double delta, const HuberConfig& cfg) {
    const double r_n = radius_rn(n, delta, cfg);
    const std::size_t anchor_count = p2_floor(n);
    const double r_anchor = radius_rn(anchor_count, delta, cfg);
    if (!std::isfinite(r_n) || !std::isfinite(r_anchor)) {
        return infinity;
    }
    const double L = -std::log(delta);
    const double inner = cfg.p() - std::sqrt(L / (2.0 * static_cast<double>(n))) - cfg.eps();
    return r_n + (1.0 / inner - 1.0) * r_anchor;
}

/// Pull count below which the bonus is infinite (forced exploration).
inline double s_lim(std::size_t t, const HuberConfig& cfg) {
    if (t == 0) {
        throw std::domain_error("s_lim requires t >= 1");
    }
    const double gap = cfg.p() - 5.0 * cfg.eps();
    const double floor_eps_bar = 9.0 / (14.0 * std::numbers::sqrt2);
    const double k = 1.0 + 2.0 * std::numbers::sqrt2 * std::max(cfg.eps_bar(), floor_eps_bar);
    return std::log(static_cast<double>(t)) * 98.0 / (128.0 * gap * gap) * k * k;
}

/// Bound on |E Y - Hub_beta(P)| from the centered q-th absolute moment.
/// Proven for beta^2 >= 9 sigma^2; see bias_bound_applies().
inline double bias_bound(double sigma, double beta, double q, double centered_moment_q) {
    if (!(q >= 2.0)) {
        throw std::domain_error("bias_bound requires q >= 2");
    }
    if (!(sigma > 0.0) || !(beta > 0.0) || !(centered_moment_q >= 0.0)) {
        throw std::domain_error("bias_bound requires sigma, beta > 0 and a nonnegative moment");
    }
    return 2.0 * centered_moment_q / ((q - 1.0) * std::pow(beta, q - 1.0));
}

inline bool bias_bound_applies(double sigma, double beta) noexcept {
    return beta * beta >= 9.0 * sigma * sigma;
}

/// HuberUCB bonus for an arm pulled s times, at step t.
inline double huber_bonus(std::size_t s, std::size_t t, const HuberConfig& cfg) {
    if (t == 0) {
        throw std::domain_error("huber_bonus requires t >= 1");
    }
    if (s == 0 || static_cast<double>(s) < s_lim(t, cfg)) {
        return infinity;
    }
    const double L = 2.0 * std::log(static_cast<double>(t));
    const double ns = static_cast<double>(s);
    if (L > detail::log_inv_delta_min(ns, cfg)) {
        return infinity;
    }
    return detail::radius_from_log(ns, L, cfg) + cfg.bias();
}

/// SeqHuberUCB bonus: the batch radius plus a correction proportional to the
/// radius at the last anchor recomputation, with delta = t^-2 throughout.
inline double seqhub_bonus(std::size_t s, std::size_t t, const HuberConfig& cfg) {
    if (t == 0) {
        throw std::domain_error("seqhub_bonus requires t >= 1");
    }
    if (s == 0) {
        return infinity;
    }
    const std::size_t anchor_count = p2_floor(s);
    if (static_cast<double>(anchor_count) < s_lim(t, cfg)) {
        return infinity;
    }
    const double L = 2.0 * std::log(static_cast<double>(t));
    const double ns = static_cast<double>(s);
    const double na = static_cast<double>(anchor_count);
    const double inner = cfg.p() - std::sqrt(L / (2.0 * ns)) - cfg.eps();
    if (!(inner > 0.0)) {
        return infinity;
    }
    if (L > detail::log_inv_delta_min(na, cfg)) {
        return infinity;
    }
    const double r_s = detail::radius_from_log(ns, L, cfg);
    const double r_anchor = detail::radius_from_log(na, L, cfg);
    if (!std::isfinite(r_s) || !std::isfinite(r_anchor)) {
        return infinity;
    }
    return r_s + (1.0 / inner - 1.0) * r_anchor + cfg.bias();
}

}  // namespace cbandits
