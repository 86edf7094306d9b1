#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "confidence.hpp"
#include "distributions.hpp"
#include "envs.hpp"
#include "estimators.hpp"
#include "rng.hpp"

namespace cbandits {

/// What a policy is told about an arm before play starts.
struct ArmModel {
    double sigma = 1.0;
    std::optional<Distribution> inlier;  // enables the exact p rule
};

inline std::vector<ArmModel> arm_models(const BanditEnv& env) {
    std::vector<ArmModel> out;
    for (const auto& a : env.arms()) {
        out.push_back({a.sigma(), a.inlier()});
    }
    return out;
}

enum class PRule { automatic, exact, chebyshev, fixed };
enum class SigmaMode { known, mad };

struct PolicyParams {
    double beta_mult = 4.0;
    double eps_assumed = 0.0;
    double bias_coef = 0.0;  // b_i = bias_coef * sigma_i^2 / beta_i
    PRule p_rule = PRule::automatic;
    double p_value = 0.75;  // used by PRule::fixed
    SigmaMode sigma_mode = SigmaMode::known;
    double sigma_floor = 1e-3;
    double exp3_clip_low = -10.0;
    double exp3_clip_high = 10.0;
    double catoni_scale = 1.0;
};

inline PRule parse_p_rule(std::string_view s) {
    if (s == "auto" || s == "automatic") return PRule::automatic;
    if (s == "exact") return PRule::exact;
    if (s == "chebyshev") return PRule::chebyshev;
    if (s == "fixed") return PRule::fixed;
    throw std::invalid_argument("unknown p rule: " + std::string(s));
}

inline SigmaMode parse_sigma_mode(std::string_view s) {
    if (s == "known") return SigmaMode::known;
    if (s == "mad") return SigmaMode::mad;
    throw std::invalid_argument("unknown sigma mode: " + std::string(s));
}

/*
 * p = P(|Y - EY| <= beta/2). `exact` and `chebyshev` are taken as is and the
 * HuberConfig constructor rejects p <= 5 eps. `automatic` prefers the exact
 * value, falls back to Chebyshev, and when the result leaves no room above
 * 5 eps (e.g. Bernoulli arms with beta far below sigma) uses (1 + 5 eps) / 2.
 */
inline double resolve_p(PRule rule, double p_value, double sigma, double beta,
                        const std::optional<Distribution>& inlier, double eps) {
    switch (rule) {
        case PRule::fixed:
            return p_value;
        case PRule::chebyshev:
            return p_chebyshev(sigma, beta);
        case PRule::exact:
            if (!inlier) {
                throw std::invalid_argument("exact p rule needs a known inlier distribution");
            }
            return prob_within(*inlier, inlier_mean(*inlier), 0.5 * beta);
        case PRule::automatic: {
            const double p = inlier ? prob_within(*inlier, inlier_mean(*inlier), 0.5 * beta)
                                    : p_chebyshev(sigma, beta);
            return p > 5.0 * eps ? p : 0.5 * (1.0 + 5.0 * eps);
        }
    }
    return p_value;
}

/// Huber parameters of one arm: beta = mult * sigma, b = coef * sigma^2 / beta.
inline HuberConfig make_huber_config(double sigma, const std::optional<Distribution>& inlier,
                                     const PolicyParams& params) {
    const double beta = params.beta_mult * sigma;
    const double p = resolve_p(params.p_rule, params.p_value, sigma, beta, inlier,
                               params.eps_assumed);
    const double bias = params.bias_coef * sigma * sigma / beta;
    return HuberConfig(beta, sigma, params.eps_assumed, p, bias);
}

class Policy {
public:
    explicit Policy(std::size_t arms) : pulls_(arms, 0) {
        if (arms == 0) {
            throw std::invalid_argument("a policy needs at least one arm");
        }
    }
    virtual ~Policy() = default;

    virtual std::size_t select_arm(StreamRng& rng) = 0;
    virtual std::string_view name() const = 0;

    void update(std::size_t arm, double reward) {
        if (arm >= pulls_.size()) {
            throw std::out_of_range("update: arm index out of range");
        }
        ++pulls_[arm];
        ++step_;
        observe(arm, reward);
    }

    std::size_t arms() const noexcept { return pulls_.size(); }
    std::size_t step() const noexcept { return step_; }
    std::size_t pulls(std::size_t arm) const { return pulls_.at(arm); }
    const std::vector<std::size_t>& pull_counts() const noexcept { return pulls_; }

protected:
    /// Called after the counters have been advanced.
    virtual void observe(std::size_t arm, double reward) = 0;

private:
    std::vector<std::size_t> pulls_;
    std::size_t step_ = 0;
};

inline constexpr double tie_tolerance = 1e-12;

/// Uniform choice among the maximizers; +inf ties only with +inf.
inline std::size_t argmax_random_tie(const std::vector<double>& values, StreamRng& rng) {
    const double best = *std::max_element(values.begin(), values.end());
    std::vector<std::size_t> winners;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const bool tied = std::isinf(best) ? values[i] == best : values[i] >= best - tie_tolerance;
        if (tied) winners.push_back(i);
    }
    if (winners.size() == 1) {
        return winners.front();
    }
    const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(winners.size()));
    return winners[std::min(pick, winners.size() - 1)];
}

class IndexPolicy : public Policy {
public:
    using Policy::Policy;

    /// Index of `arm` for the upcoming step t = step() + 1.
    virtual double index(std::size_t arm) const = 0;

    std::vector<double> indices() const {
        std::vector<double> out(arms());
        for (std::size_t i = 0; i < arms(); ++i) out[i] = index(i);
        return out;
    }

    std::size_t select_arm(StreamRng& rng) override { return argmax_random_tie(indices(), rng); }

protected:
    std::size_t next_step() const noexcept { return step() + 1; }
};

/// Per-arm sigma: the supplied value, or a MAD estimate refreshed at
/// power-of-two pull counts. Both are floored to keep beta positive.
class SigmaSource {
public:
    SigmaSource(std::vector<ArmModel> models, SigmaMode mode, double floor)
        : models_(std::move(models)), mode_(mode), floor_(floor) {
        if (!(floor > 0.0)) {
            throw std::invalid_argument("sigma floor must be positive");
        }
        for (const auto& m : models_) {
            current_.push_back(mode_ == SigmaMode::known ? std::max(m.sigma, floor_) : floor_);
        }
    }

    double sigma(std::size_t arm) const { return current_.at(arm); }
    SigmaMode mode() const noexcept { return mode_; }
    const ArmModel& model(std::size_t arm) const { return models_.at(arm); }
    std::size_t size() const noexcept { return models_.size(); }

    /// Returns true when the estimate for `arm` changed.
    bool refresh(std::size_t arm, std::span<const double> samples) {
        if (mode_ != SigmaMode::mad || samples.empty() || samples.size() != p2_floor(samples.size())) {
            return false;
        }
        const double next = std::max(mad_scale(samples), floor_);
        const bool changed = next != current_[arm];
        current_[arm] = next;
        return changed;
    }

private:
    std::vector<ArmModel> models_;
    SigmaMode mode_;
    double floor_;
    std::vector<double> current_;
};

class HuberFamilyPolicy : public IndexPolicy {
public:
    HuberFamilyPolicy(std::vector<ArmModel> models, const PolicyParams& params)
        : IndexPolicy(models.size()),
          params_(params),
          sigmas_(std::move(models), params.sigma_mode, params.sigma_floor) {
        if (!(params.beta_mult > 0.0)) {
            throw std::invalid_argument("beta multiplier must be positive");
        }
        for (std::size_t i = 0; i < arms(); ++i) {
            configs_.push_back(build_config(i));
        }
    }

    const HuberConfig& config(std::size_t arm) const { return configs_.at(arm); }
    const PolicyParams& params() const noexcept { return params_; }

protected:
    HuberConfig build_config(std::size_t arm) const {
        const std::optional<Distribution> inlier =
            sigmas_.mode() == SigmaMode::known ? sigmas_.model(arm).inlier : std::nullopt;
        return make_huber_config(sigmas_.sigma(arm), inlier, params_);
    }

    /// Rebuilds the arm's config when its MAD sigma moved; true if it did.
    bool refresh_sigma(std::size_t arm, std::span<const double> samples) {
        if (!sigmas_.refresh(arm, samples)) return false;
        configs_[arm] = build_config(arm);
        return true;
    }

    PolicyParams params_;
    SigmaSource sigmas_;
    std::vector<HuberConfig> configs_;
};

/// Batch Huber estimate, recomputed for the pulled arm on every pull.
class HuberUcb : public HuberFamilyPolicy {
public:
    HuberUcb(std::vector<ArmModel> models, const PolicyParams& params)
        : HuberFamilyPolicy(std::move(models), params),
          buffers_(arms()),
          estimates_(arms(), 0.0) {}

    std::string_view name() const override { return "huber_ucb"; }

    double index(std::size_t arm) const override {
        const double bonus = huber_bonus(pulls(arm), next_step(), configs_[arm]);
        if (std::isinf(bonus)) return infinity;
        return estimates_[arm] + bonus;
    }

    double estimate(std::size_t arm) const { return estimates_.at(arm); }
    std::span<const double> samples(std::size_t arm) const { return buffers_.at(arm); }

protected:
    void observe(std::size_t arm, double reward) override {
        auto& buf = buffers_[arm];
        buf.push_back(reward);
        refresh_sigma(arm, buf);
        const std::optional<double> warm =
            buf.size() > 1 ? std::optional<double>(estimates_[arm]) : std::nullopt;
        estimates_[arm] = huber_estimate(buf, InfluenceParams(configs_[arm].beta()), warm);
    }

private:
    std::vector<std::vector<double>> buffers_;
    std::vector<double> estimates_;
};

class SeqHuberUcb : public HuberFamilyPolicy {
public:
    SeqHuberUcb(std::vector<ArmModel> models, const PolicyParams& params)
        : HuberFamilyPolicy(std::move(models), params) {
        for (std::size_t i = 0; i < arms(); ++i) {
            states_.emplace_back(InfluenceParams(configs_[i].beta()));
        }
    }

    std::string_view name() const override { return "seq_huber_ucb"; }

    double index(std::size_t arm) const override {
        const double bonus = seqhub_bonus(pulls(arm), next_step(), configs_[arm]);
        if (std::isinf(bonus)) return infinity;
        return states_[arm].value() + bonus;
    }

    const SeqHuber& state(std::size_t arm) const { return states_.at(arm); }

protected:
    void observe(std::size_t arm, double reward) override {
        auto& st = states_[arm];
        const std::size_t next = st.count() + 1;
        if (sigmas_.mode() == SigmaMode::mad && next == p2_floor(next)) {
            // Beta follows the new sigma, so the stream is replayed under it.
            std::vector<double> samples(st.samples().begin(), st.samples().end());
            samples.push_back(reward);
            if (refresh_sigma(arm, samples)) {
                SeqHuber fresh(InfluenceParams(configs_[arm].beta()));
                for (const double x : samples) fresh.update(x);
                st = std::move(fresh);
                return;
            }
        }
        st.update(reward);
    }

private:
    std::vector<SeqHuber> states_;
};

class Ucb1 : public IndexPolicy {
public:
    explicit Ucb1(std::size_t arms) : IndexPolicy(arms), sums_(arms, 0.0) {}

    std::string_view name() const override { return "ucb1"; }

    double index(std::size_t arm) const override {
        const std::size_t s = pulls(arm);
        if (s == 0) return infinity;
        const double ns = static_cast<double>(s);
        return sums_[arm] / ns +
               std::sqrt(2.0 * std::log(static_cast<double>(next_step())) / ns);
    }

protected:
    void observe(std::size_t arm, double reward) override { sums_[arm] += reward; }

private:
    std::vector<double> sums_;
};

/// Huber estimate with beta = scale * sigma * sqrt(s) and bonus 2 sigma sqrt(2 ln t / s).
class RobustUcbCatoni : public IndexPolicy {
public:
    RobustUcbCatoni(std::vector<ArmModel> models, const PolicyParams& params)
        : IndexPolicy(models.size()),
          scale_(params.catoni_scale),
          sigmas_(std::move(models), params.sigma_mode, params.sigma_floor),
          buffers_(arms()),
          estimates_(arms(), 0.0) {
        if (!(scale_ > 0.0)) {
            throw std::invalid_argument("catoni scale must be positive");
        }
    }

    std::string_view name() const override { return "robust_ucb_catoni"; }

    double index(std::size_t arm) const override {
        const std::size_t s = pulls(arm);
        if (s == 0) return infinity;
        const double sigma = sigmas_.sigma(arm);
        return estimates_[arm] +
               2.0 * sigma *
                   std::sqrt(2.0 * std::log(static_cast<double>(next_step())) /
                             static_cast<double>(s));
    }

protected:
    void observe(std::size_t arm, double reward) override {
        auto& buf = buffers_[arm];
        buf.push_back(reward);
        sigmas_.refresh(arm, buf);
        const std::optional<double> warm =
            buf.size() > 1 ? std::optional<double>(estimates_[arm]) : std::nullopt;
        estimates_[arm] = catoni_estimate(buf, sigmas_.sigma(arm), scale_, warm);
    }

private:
    double scale_;
    SigmaSource sigmas_;
    std::vector<std::vector<double>> buffers_;
    std::vector<double> estimates_;
};

/// Number of median-of-means blocks at step t for s samples.
inline std::size_t mom_blocks(std::size_t s, std::size_t t) {
    const double want = std::ceil(8.0 * std::log(static_cast<double>(t)));
    const auto b = static_cast<std::size_t>(std::max(want, 1.0));
    return std::max<std::size_t>(1, std::min(b, s));
}

/// Median of means with ceil(8 ln t) blocks and bonus 12 sigma sqrt(ln t / s).
class RobustUcbMom : public IndexPolicy {
public:
    RobustUcbMom(std::vector<ArmModel> models, const PolicyParams& params)
        : IndexPolicy(models.size()),
          sigmas_(std::move(models), params.sigma_mode, params.sigma_floor),
          buffers_(arms()),
          cache_(arms()) {}

    std::string_view name() const override { return "robust_ucb_mom"; }

    double index(std::size_t arm) const override {
        const std::size_t s = pulls(arm);
        if (s == 0) return infinity;
        const std::size_t t = next_step();
        return estimate(arm, mom_blocks(s, t)) +
               12.0 * sigmas_.sigma(arm) *
                   std::sqrt(std::log(static_cast<double>(t)) / static_cast<double>(s));
    }

protected:
    void observe(std::size_t arm, double reward) override {
        buffers_[arm].push_back(reward);
        sigmas_.refresh(arm, buffers_[arm]);
        cache_[arm].reset();
    }

private:
    struct Cached {
        std::size_t blocks;
        double value;
    };

    // The block count moves with t, so the estimate is cached per (arm, blocks)
    // and dropped whenever the arm receives a sample.
    double estimate(std::size_t arm, std::size_t blocks) const {
        auto& c = cache_[arm];
        if (!c || c->blocks != blocks) {
            c = Cached{blocks, median_of_means(buffers_[arm], blocks)};
        }
        return c->value;
    }

    SigmaSource sigmas_;
    std::vector<std::vector<double>> buffers_;
    mutable std::vector<std::optional<Cached>> cache_;
};

/// Exponential weights on importance-weighted clipped rewards, kept in log space.
class Exp3 : public Policy {
public:
    Exp3(std::size_t arms, std::size_t horizon, double clip_low = -10.0, double clip_high = 10.0)
        : Policy(arms), log_weights_(arms, 0.0), clip_low_(clip_low), clip_high_(clip_high) {
        if (horizon == 0) {
            throw std::invalid_argument("Exp3 needs a positive horizon");
        }
        if (!(clip_low < clip_high)) {
            throw std::invalid_argument("Exp3 clip range must satisfy low < high");
        }
        const double k = static_cast<double>(arms);
        eta_ = std::sqrt(std::log(k) / (k * static_cast<double>(horizon)));
        probs_.assign(arms, 1.0 / k);
    }

    std::string_view name() const override { return "exp3"; }

    std::size_t select_arm(StreamRng& rng) override {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            acc += probs_[i];
            if (u < acc) return i;
        }
        // u landed in the rounding slack above the last partial sum.
        for (std::size_t i = probs_.size(); i-- > 0;) {
            if (probs_[i] > 0.0) return i;
        }
        return probs_.size() - 1;
    }

    const std::vector<double>& probabilities() const noexcept { return probs_; }
    const std::vector<double>& log_weights() const noexcept { return log_weights_; }
    double learning_rate() const noexcept { return eta_; }

protected:
    void observe(std::size_t arm, double reward) override {
        const double r = std::clamp(reward, clip_low_, clip_high_);
        log_weights_[arm] += eta_ * r / probs_[arm];
        renormalize();
    }

private:
    void renormalize() {
        const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
        double total = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            probs_[i] = std::exp(log_weights_[i] - top);
            total += probs_[i];
        }
        for (auto& p : probs_) p /= total;
    }

    std::vector<double> log_weights_;
    std::vector<double> probs_;
    double clip_low_;
    double clip_high_;
    double eta_ = 0.0;
};

inline const std::vector<std::string>& policy_names() {
    static const std::vector<std::string> names = {
        "huber_ucb", "seq_huber_ucb", "ucb1", "robust_ucb_catoni", "robust_ucb_mom", "exp3"};
    return names;
}

inline std::unique_ptr<Policy> make_policy(std::string_view name, const PolicyParams& params,
                                           std::vector<ArmModel> models, std::size_t horizon) {
    if (name == "huber_ucb") return std::make_unique<HuberUcb>(std::move(models), params);
    if (name == "seq_huber_ucb") return std::make_unique<SeqHuberUcb>(std::move(models), params);
    if (name == "ucb1") return std::make_unique<Ucb1>(models.size());
    if (name == "robust_ucb_catoni") {
        return std::make_unique<RobustUcbCatoni>(std::move(models), params);
    }
    if (name == "robust_ucb_mom") return std::make_unique<RobustUcbMom>(std::move(models), params);
    if (name == "exp3") {
        return std::make_unique<Exp3>(models.size(), horizon, params.exp3_clip_low,
                                      params.exp3_clip_high);
    }
    throw std::invalid_argument("unknown policy: " + std::string(name));
}

}  // namespace cbandits
