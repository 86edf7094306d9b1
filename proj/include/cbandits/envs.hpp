#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "distributions.hpp"
#include "rng.hpp"

namespace cbandits {

/// Mixture (1 - eps) P + eps H of an inlier and an outlier law.
class CorruptedArm {
public:
    CorruptedArm(Distribution inlier, Distribution outlier, double eps)
        : inlier_(inlier), outlier_(outlier), eps_(eps) {
        validate(inlier_);
        validate(outlier_);
        if (!(eps >= 0.0 && eps < 0.5)) {
            throw std::invalid_argument("CorruptedArm: eps must lie in [0, 0.5)");
        }
        // Inliers need two finite moments; outliers are never asked for any.
        mean_ = inlier_mean(inlier_);
        var_ = inlier_var(inlier_);
    }

    const Distribution& inlier() const noexcept { return inlier_; }
    const Distribution& outlier() const noexcept { return outlier_; }
    double eps() const noexcept { return eps_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return var_; }
    double sigma() const noexcept { return std::sqrt(var_); }

    CorruptedArm with_eps(double eps) const { return {inlier_, outlier_, eps}; }

private:
    Distribution inlier_;
    Distribution outlier_;
    double eps_;
    double mean_ = 0.0;
    double var_ = 0.0;
};

struct RewardDraw {
    double value;
    bool corrupted;
};

/// Nature's draw: first the corruption coin, then the selected law.
inline RewardDraw sample_reward(const CorruptedArm& arm, StreamRng& rng) {
    const bool corrupted = rng.uniform() < arm.eps();
    if (corrupted) {
        return {sample(arm.outlier(), rng), true};
    }
    return {sample(arm.inlier(), rng), false};
}

class BanditEnv {
public:
    explicit BanditEnv(std::vector<CorruptedArm> arms) : arms_(std::move(arms)) {
        if (arms_.empty()) {
            throw std::invalid_argument("BanditEnv needs at least one arm");
        }
        double best = -infinity_;
        for (std::size_t i = 0; i < arms_.size(); ++i) {
            if (arms_[i].mean() > best) {
                best = arms_[i].mean();
                optimal_ = i;
            }
        }
        gaps_.reserve(arms_.size());
        for (const auto& a : arms_) {
            gaps_.push_back(best - a.mean());
        }
        gaps_[optimal_] = 0.0;
    }

    std::size_t size() const noexcept { return arms_.size(); }
    const CorruptedArm& arm(std::size_t i) const { return arms_.at(i); }
    const std::vector<CorruptedArm>& arms() const noexcept { return arms_; }
    const std::vector<double>& gaps() const noexcept { return gaps_; }
    std::size_t optimal_arm() const noexcept { return optimal_; }

    std::vector<double> means() const {
        std::vector<double> out;
        for (const auto& a : arms_) out.push_back(a.mean());
        return out;
    }
    std::vector<double> sigmas() const {
        std::vector<double> out;
        for (const auto& a : arms_) out.push_back(a.sigma());
        return out;
    }

    BanditEnv with_eps(double eps) const {
        std::vector<CorruptedArm> arms;
        for (const auto& a : arms_) arms.push_back(a.with_eps(eps));
        return BanditEnv(std::move(arms));
    }

private:
    static constexpr double infinity_ = std::numeric_limits<double>::infinity();
    std::vector<CorruptedArm> arms_;
    std::vector<double> gaps_;
    std::size_t optimal_ = 0;
};

enum class Preset { bernoulli, student, pareto, weibull };

inline Preset parse_preset(std::string_view name) {
    if (name == "bernoulli") return Preset::bernoulli;
    if (name == "student") return Preset::student;
    if (name == "pareto") return Preset::pareto;
    if (name == "weibull") return Preset::weibull;
    throw std::invalid_argument("unknown environment preset: " + std::string(name));
}

inline std::string_view preset_name(Preset p) {
    switch (p) {
        case Preset::bernoulli: return "bernoulli";
        case Preset::student: return "student";
        case Preset::pareto: return "pareto";
        case Preset::weibull: return "weibull";
    }
    return "unknown";
}

/// The three-armed benchmark environments. The Weibull preset carries the
/// heavy-tail Gaussian outliers too, so a nonzero eps corrupts it the same way.
inline BanditEnv make_paper_env(Preset preset, double eps) {
    const Distribution heavy_outliers[3] = {Gaussian{100.0, 1.0}, Gaussian{100.0, 1.0},
                                            Gaussian{-1000.0, 1.0}};
    std::vector<CorruptedArm> arms;
    switch (preset) {
        case Preset::bernoulli: {
            const double inlier[3] = {0.1, 0.97, 0.99};
            const double outlier[3] = {0.999, 0.999, 0.001};
            for (int i = 0; i < 3; ++i) {
                arms.emplace_back(Bernoulli{inlier[i]}, Bernoulli{outlier[i]}, eps);
            }
            break;
        }
        case Preset::student: {
            const double location[3] = {0.1, 0.95, 1.0};
            for (int i = 0; i < 3; ++i) {
                arms.emplace_back(StudentT{3.0, location[i]}, heavy_outliers[i], eps);
            }
            break;
        }
        case Preset::pareto: {
            const double shape[3] = {3.0, 3.0, 2.1};
            const double scale[3] = {0.1, 0.2, 0.3};
            for (int i = 0; i < 3; ++i) {
                arms.emplace_back(Pareto{shape[i], scale[i]}, heavy_outliers[i], eps);
            }
            break;
        }
        case Preset::weibull: {
            const double shape[3] = {2.0, 2.0, 0.75};
            const double scale[3] = {0.5, 0.7, 0.8};
            for (int i = 0; i < 3; ++i) {
                arms.emplace_back(Weibull{shape[i], scale[i]}, heavy_outliers[i], eps);
            }
            break;
        }
    }
    return BanditEnv(std::move(arms));
}

inline BanditEnv make_paper_env(std::string_view preset, double eps) {
    return make_paper_env(parse_preset(preset), eps);
}

/// E[psi_beta(Y - theta)] = int_0^beta P(Y - theta > u) - P(Y - theta < -u) du.
inline double expected_influence(const Distribution& d, double theta, double beta) {
    // Atomic laws: the cdf jumps defeat quadrature, but the sum is exact.
    auto clipped = [beta](double x) { return std::clamp(x, -beta, beta); };
    if (const auto* b = std::get_if<Bernoulli>(&d)) {
        return (1.0 - b->mean) * clipped(-theta) + b->mean * clipped(1.0 - theta);
    }
    if (const auto* dirac = std::get_if<Dirac>(&d)) {
        return clipped(dirac->point - theta);
    }
    auto integrand = [&](double u) {
        return (1.0 - cdf(d, theta + u, true)) - cdf(d, theta - u, false);
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, beta, 12,
                                                                         1e-14);
}

/// Population Huber functional Hub_beta(P): the root of theta -> E psi_beta(Y - theta).
inline double huber_functional(const Distribution& d, double beta) {
    if (!(beta > 0.0)) {
        throw std::invalid_argument("huber_functional requires beta > 0");
    }
    const double centre = inlier_mean(d);
    const double spread = std::max(std::sqrt(inlier_var(d)), beta);
    double lo = centre - spread;
    double hi = centre + spread;
    auto f = [&](double theta) { return expected_influence(d, theta, beta); };
    for (int i = 0; i < 60 && f(lo) < 0.0; ++i) lo -= (hi - lo);
    for (int i = 0; i < 60 && f(hi) > 0.0; ++i) hi += (hi - lo);
    if (f(lo) == 0.0) return lo;
    if (f(hi) == 0.0) return hi;
    boost::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        f, lo, hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
    return 0.5 * (a + b);
}

}  // namespace cbandits
