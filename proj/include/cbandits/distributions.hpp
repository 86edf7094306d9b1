#pragma once

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

#include <boost/math/distributions/students_t.hpp>

#include "rng.hpp"

namespace cbandits {

struct Bernoulli {
    double mean;
};
struct Gaussian {
    double mean;
    double std;
};
/// Student's t with unit scale, shifted by `location`.
struct StudentT {
    double df;
    double location;
};
/// Survival function (scale / x)^shape for x >= scale.
struct Pareto {
    double shape;
    double scale;
};
struct Weibull {
    double shape;
    double scale;
};
struct Dirac {
    double point;
};

using Distribution = std::variant<Bernoulli, Gaussian, StudentT, Pareto, Weibull, Dirac>;

inline void validate(const Distribution& d) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                if (!(v.mean >= 0.0 && v.mean <= 1.0)) {
                    throw std::invalid_argument("Bernoulli mean must lie in [0, 1]");
                }
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(v.std > 0.0) || !std::isfinite(v.mean)) {
                    throw std::invalid_argument("Gaussian std must be positive");
                }
            } else if constexpr (std::is_same_v<T, StudentT>) {
                if (!(v.df > 0.0) || !std::isfinite(v.location)) {
                    throw std::invalid_argument("StudentT df must be positive");
                }
            } else if constexpr (std::is_same_v<T, Pareto> || std::is_same_v<T, Weibull>) {
                if (!(v.shape > 0.0) || !(v.scale > 0.0)) {
                    throw std::invalid_argument("shape and scale must be positive");
                }
            } else {
                if (!std::isfinite(v.point)) {
                    throw std::invalid_argument("Dirac point must be finite");
                }
            }
        },
        d);
}

inline std::string describe(const Distribution& d) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            auto num = [](double x) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", x);
                return std::string(buf);
            };
            if constexpr (std::is_same_v<T, Bernoulli>) {
                return "Bernoulli(" + num(v.mean) + ")";
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return "Gaussian(" + num(v.mean) + "," + num(v.std) + ")";
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return "StudentT(" + num(v.df) + "," + num(v.location) + ")";
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return "Pareto(" + num(v.shape) + "," + num(v.scale) + ")";
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return "Weibull(" + num(v.shape) + "," + num(v.scale) + ")";
            } else {
                return "Dirac(" + num(v.point) + ")";
            }
        },
        d);
}

/// Throws std::domain_error when the mean is undefined.
inline double inlier_mean(const Distribution& d) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli> || std::is_same_v<T, Gaussian>) {
                return v.mean;
            } else if constexpr (std::is_same_v<T, StudentT>) {
                if (!(v.df > 1.0)) throw std::domain_error("StudentT mean needs df > 1");
                return v.location;
            } else if constexpr (std::is_same_v<T, Pareto>) {
                if (!(v.shape > 1.0)) throw std::domain_error("Pareto mean needs shape > 1");
                return v.shape * v.scale / (v.shape - 1.0);
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return v.scale * std::tgamma(1.0 + 1.0 / v.shape);
            } else {
                return v.point;
            }
        },
        d);
}

/// Throws std::domain_error when the variance is undefined.
inline double inlier_var(const Distribution& d) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                return v.mean * (1.0 - v.mean);
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return v.std * v.std;
            } else if constexpr (std::is_same_v<T, StudentT>) {
                if (!(v.df > 2.0)) throw std::domain_error("StudentT variance needs df > 2");
                return v.df / (v.df - 2.0);
            } else if constexpr (std::is_same_v<T, Pareto>) {
                if (!(v.shape > 2.0)) throw std::domain_error("Pareto variance needs shape > 2");
                const double a = v.shape;
                return v.scale * v.scale * a / ((a - 1.0) * (a - 1.0) * (a - 2.0));
            } else if constexpr (std::is_same_v<T, Weibull>) {
                const double g1 = std::tgamma(1.0 + 1.0 / v.shape);
                const double g2 = std::tgamma(1.0 + 2.0 / v.shape);
                return v.scale * v.scale * (g2 - g1 * g1);
            } else {
                return 0.0;
            }
        },
        d);
}

/// True when the law is symmetric about its mean (zero Huber bias).
inline bool is_symmetric(const Distribution& d) {
    return std::visit(
        [](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                return v.mean == 0.5 || v.mean == 0.0 || v.mean == 1.0;
            } else if constexpr (std::is_same_v<T, Pareto> || std::is_same_v<T, Weibull>) {
                return false;
            } else {
                return true;
            }
        },
        d);
}

/// P(Y <= x) when `inclusive`, else P(Y < x).
inline double cdf(const Distribution& d, double x, bool inclusive = true) {
    return std::visit(
        [x, inclusive](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                if (x < 0.0 || (!inclusive && x == 0.0)) return 0.0;
                if (x < 1.0 || (!inclusive && x == 1.0)) return 1.0 - v.mean;
                return 1.0;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return 0.5 * std::erfc(-(x - v.mean) / (v.std * std::numbers::sqrt2));
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return boost::math::cdf(boost::math::students_t_distribution<double>(v.df),
                                        x - v.location);
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return x <= v.scale ? 0.0 : 1.0 - std::pow(v.scale / x, v.shape);
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / v.scale, v.shape));
            } else {
                return (x > v.point || (inclusive && x == v.point)) ? 1.0 : 0.0;
            }
        },
        d);
}

/// P(|Y - center| <= radius).
inline double prob_within(const Distribution& d, double center, double radius) {
    return cdf(d, center + radius, true) - cdf(d, center - radius, false);
}

/// Draws one value. Dirac consumes no randomness; every other family consumes
/// a fixed pattern of draws from `rng`.
inline double sample(const Distribution& d, StreamRng& rng) {
    return std::visit(
        [&rng](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                return rng.uniform() < v.mean ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                std::normal_distribution<double> dist(v.mean, v.std);
                return dist(rng);
            } else if constexpr (std::is_same_v<T, StudentT>) {
                std::student_t_distribution<double> dist(v.df);
                return v.location + dist(rng);
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return v.scale * std::pow(rng.uniform_open(), -1.0 / v.shape);
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return v.scale * std::pow(-std::log(rng.uniform_open()), 1.0 / v.shape);
            } else {
                return v.point;
            }
        },
        d);
}

}  // namespace cbandits
