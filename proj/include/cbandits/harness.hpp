#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "envs.hpp"
#include "policies.hpp"
#include "rng.hpp"
#include "theory.hpp"

namespace cbandits {

using json = nlohmann::json;

// ---------------------------------------------------------------- config

struct InlineArm {
    Distribution inlier;
    Distribution outlier;
};

struct ExperimentConfig {
    std::string env = "bernoulli";
    std::vector<InlineArm> arms;  // overrides `env` when nonempty
    std::vector<std::string> policies = {"huber_ucb"};
    double eps_true = 0.0;
    std::optional<double> eps_assumed;  // defaults to eps_true
    std::optional<double> beta_mult;    // defaults to the preset's choice
    std::optional<double> bias_coef;    // defaults to the preset's choice
    PRule p_rule = PRule::automatic;
    double p_value = 0.75;
    SigmaMode sigma_mode = SigmaMode::known;
    double sigma_floor = 1e-3;
    double exp3_clip_low = -10.0;
    double exp3_clip_high = 10.0;
    double catoni_scale = 1.0;
    std::size_t horizon = 5000;
    std::size_t reps = 100;
    std::uint64_t seed = 0;
    std::string out;
    bool overlay = false;
    std::string sweep_axis;  // "beta" or "eps"; empty for none
    std::vector<double> sweep_values;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
        if (reps == 0) throw std::invalid_argument("reps must be >= 1");
        if (policies.empty()) throw std::invalid_argument("at least one policy is required");
        if (!(eps_true >= 0.0 && eps_true < 0.5)) {
            throw std::invalid_argument("eps_true must lie in [0, 0.5)");
        }
        const double ea = eps_assumed.value_or(eps_true);
        if (!(ea >= 0.0 && ea < 0.5)) {
            throw std::invalid_argument("eps_assumed must lie in [0, 0.5)");
        }
        if (!sweep_axis.empty() && sweep_axis != "beta" && sweep_axis != "eps") {
            throw std::invalid_argument("sweep axis must be 'beta' or 'eps'");
        }
    }
};

/// Huber-family settings used for each preset's experiments.
inline double preset_beta_mult(std::string_view env) {
    if (env == "bernoulli") return 0.1;
    if (env == "student") return 1.0;
    if (env == "pareto") return 1.5;
    return 4.0;
}

inline double preset_bias_coef(std::string_view env) { return env == "pareto" ? 1.0 : 0.0; }

inline PolicyParams policy_params(const ExperimentConfig& c) {
    const bool inline_env = !c.arms.empty();
    PolicyParams p;
    p.beta_mult = c.beta_mult.value_or(inline_env ? 4.0 : preset_beta_mult(c.env));
    p.bias_coef = c.bias_coef.value_or(inline_env ? 0.0 : preset_bias_coef(c.env));
    p.eps_assumed = c.eps_assumed.value_or(c.eps_true);
    p.p_rule = c.p_rule;
    p.p_value = c.p_value;
    p.sigma_mode = c.sigma_mode;
    p.sigma_floor = c.sigma_floor;
    p.exp3_clip_low = c.exp3_clip_low;
    p.exp3_clip_high = c.exp3_clip_high;
    p.catoni_scale = c.catoni_scale;
    return p;
}

inline BanditEnv build_env(const ExperimentConfig& c) {
    if (c.arms.empty()) {
        return make_paper_env(c.env, c.eps_true);
    }
    std::vector<CorruptedArm> arms;
    for (const auto& a : c.arms) arms.emplace_back(a.inlier, a.outlier, c.eps_true);
    return BanditEnv(std::move(arms));
}

// ---------------------------------------------------------------- JSON

inline json distribution_to_json(const Distribution& d) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                return {{"family", "bernoulli"}, {"mean", v.mean}};
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return {{"family", "gaussian"}, {"mean", v.mean}, {"std", v.std}};
            } else if constexpr (std::is_same_v<T, StudentT>) {
                return {{"family", "student"}, {"df", v.df}, {"location", v.location}};
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return {{"family", "pareto"}, {"shape", v.shape}, {"scale", v.scale}};
            } else if constexpr (std::is_same_v<T, Weibull>) {
                return {{"family", "weibull"}, {"shape", v.shape}, {"scale", v.scale}};
            } else {
                return {{"family", "dirac"}, {"point", v.point}};
            }
        },
        d);
}

inline Distribution distribution_from_json(const json& j) {
    const std::string family = j.at("family").get<std::string>();
    Distribution d;
    if (family == "bernoulli") {
        d = Bernoulli{j.at("mean").get<double>()};
    } else if (family == "gaussian") {
        d = Gaussian{j.at("mean").get<double>(), j.at("std").get<double>()};
    } else if (family == "student") {
        d = StudentT{j.at("df").get<double>(), j.value("location", 0.0)};
    } else if (family == "pareto") {
        d = Pareto{j.at("shape").get<double>(), j.at("scale").get<double>()};
    } else if (family == "weibull") {
        d = Weibull{j.at("shape").get<double>(), j.at("scale").get<double>()};
    } else if (family == "dirac") {
        d = Dirac{j.at("point").get<double>()};
    } else {
        throw std::invalid_argument("unknown distribution family: " + family);
    }
    validate(d);
    return d;
}

inline std::string_view p_rule_name(PRule r) {
    switch (r) {
        case PRule::automatic: return "auto";
        case PRule::exact: return "exact";
        case PRule::chebyshev: return "chebyshev";
        case PRule::fixed: return "fixed";
    }
    return "auto";
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["env"] = c.env;
    if (!c.arms.empty()) {
        json arms = json::array();
        for (const auto& a : c.arms) {
            arms.push_back({{"inlier", distribution_to_json(a.inlier)},
                            {"outlier", distribution_to_json(a.outlier)}});
        }
        j["arms"] = arms;
    }
    j["policies"] = c.policies;
    j["eps_true"] = c.eps_true;
    if (c.eps_assumed) j["eps_assumed"] = *c.eps_assumed;
    if (c.beta_mult) j["beta_mult"] = *c.beta_mult;
    if (c.bias_coef) j["bias_coef"] = *c.bias_coef;
    j["p_rule"] = std::string(p_rule_name(c.p_rule));
    j["p_value"] = c.p_value;
    j["sigma_mode"] = c.sigma_mode == SigmaMode::known ? "known" : "mad";
    j["sigma_floor"] = c.sigma_floor;
    j["exp3_clip"] = {c.exp3_clip_low, c.exp3_clip_high};
    j["catoni_scale"] = c.catoni_scale;
    j["horizon"] = c.horizon;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["overlay"] = c.overlay;
    if (!c.sweep_axis.empty()) {
        j["sweep"] = {{"axis", c.sweep_axis}, {"values", c.sweep_values}};
    }
    j["threads"] = c.threads;
    return j;
}

/// Fields absent from `j` keep their current values in `c`.
inline void apply_json(ExperimentConfig& c, const json& j) {
    if (j.contains("env")) c.env = j["env"].get<std::string>();
    if (j.contains("arms")) {
        c.arms.clear();
        for (const auto& a : j["arms"]) {
            c.arms.push_back({distribution_from_json(a.at("inlier")),
                              a.contains("outlier") ? distribution_from_json(a["outlier"])
                                                    : Distribution{Dirac{0.0}}});
        }
    }
    if (j.contains("policy")) c.policies = {j["policy"].get<std::string>()};
    if (j.contains("policies")) c.policies = j["policies"].get<std::vector<std::string>>();
    if (j.contains("eps_true")) c.eps_true = j["eps_true"].get<double>();
    if (j.contains("eps_assumed")) c.eps_assumed = j["eps_assumed"].get<double>();
    if (j.contains("beta_mult")) c.beta_mult = j["beta_mult"].get<double>();
    if (j.contains("bias_coef")) c.bias_coef = j["bias_coef"].get<double>();
    if (j.contains("p_rule")) c.p_rule = parse_p_rule(j["p_rule"].get<std::string>());
    if (j.contains("p_value")) c.p_value = j["p_value"].get<double>();
    if (j.contains("sigma_mode")) {
        c.sigma_mode = parse_sigma_mode(j["sigma_mode"].get<std::string>());
    }
    if (j.contains("sigma_floor")) c.sigma_floor = j["sigma_floor"].get<double>();
    if (j.contains("exp3_clip")) {
        const auto v = j["exp3_clip"].get<std::vector<double>>();
        if (v.size() != 2) throw std::invalid_argument("exp3_clip must be [low, high]");
        c.exp3_clip_low = v[0];
        c.exp3_clip_high = v[1];
    }
    if (j.contains("catoni_scale")) c.catoni_scale = j["catoni_scale"].get<double>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<std::size_t>();
    if (j.contains("reps")) c.reps = j["reps"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("overlay")) c.overlay = j["overlay"].get<bool>();
    if (j.contains("sweep")) {
        c.sweep_axis = j["sweep"].at("axis").get<std::string>();
        c.sweep_values = j["sweep"].at("values").get<std::vector<double>>();
    }
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
    }
    ExperimentConfig c;
    apply_json(c, j);
    return c;
}

// ---------------------------------------------------------------- episodes

struct Episode {
    std::vector<std::uint32_t> arms;  // A_t for t = 1..n
    std::vector<std::size_t> pulls;   // T_i(n)
    std::size_t corrupted = 0;
};

/// One seeded run. The policy draws from the policy lane and the reward from
/// the environment lane of step t, so a run depends only on (seed, replication).
inline Episode run_episode(const BanditEnv& env, Policy& policy, std::size_t horizon,
                           std::uint64_t seed, std::uint64_t replication = 0) {
    if (policy.arms() != env.size()) {
        throw std::invalid_argument("policy and environment disagree on the number of arms");
    }
    Episode ep;
    ep.arms.reserve(horizon);
    for (std::size_t t = 1; t <= horizon; ++t) {
        StreamRng prng(seed, replication, t, Lane::policy);
        const std::size_t a = policy.select_arm(prng);
        StreamRng erng(seed, replication, t, Lane::environment);
        const RewardDraw r = sample_reward(env.arm(a), erng);
        policy.update(a, r.value);
        ep.arms.push_back(static_cast<std::uint32_t>(a));
        ep.corrupted += r.corrupted ? 1 : 0;
    }
    ep.pulls = policy.pull_counts();
    return ep;
}

inline Episode run_episode(const BanditEnv& env, std::string_view policy,
                           const PolicyParams& params, std::size_t horizon, std::uint64_t seed,
                           std::uint64_t replication = 0) {
    auto p = make_policy(policy, params, arm_models(env), horizon);
    return run_episode(env, *p, horizon, seed, replication);
}

/// sum_t Delta_{A_t}, accumulated along the trajectory.
inline double trajectory_regret(const BanditEnv& env, const Episode& ep) {
    double r = 0.0;
    for (const auto a : ep.arms) r += env.gaps()[a];
    return r;
}

struct RegretCurve {
    std::string label;
    std::vector<double> mean_regret;  // R_t for t = 1..n
    std::vector<double> stderr_regret;
    std::vector<double> mean_pulls;  // T_i(n) averaged over replications
    std::vector<double> overlay;     // empty unless requested
    std::size_t reps = 0;
};

/// Runs body(i) for i in [0, count) on `threads` workers; the first exception wins.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

/// Sum over suboptimal arms of Delta_i times the explicit-constant pull bound
/// at horizon t. +inf where the bound does not apply.
inline double bound_overlay_at(const BanditEnv& env, std::string_view policy,
                               const PolicyParams& params, std::size_t t) {
    double total = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double gap = env.gaps()[i];
        if (gap == 0.0) continue;
        const auto& arm = env.arm(i);
        const double sigma = std::max(arm.sigma(), params.sigma_floor);
        try {
            const HuberConfig cfg = make_huber_config(sigma, arm.inlier(), params);
            double pulls;
            if (policy == "seq_huber_ucb") {
                pulls = upper_bound_pulls_seqhuberucb(t, gap, sigma, cfg.eps(), cfg.p());
            } else {
                pulls = upper_bound_pulls_huberucb_simplified(t, gap, sigma, cfg.eps(), cfg.p());
            }
            total += gap * pulls;
        } catch (const std::exception&) {
            return infinity;
        }
    }
    return total;
}

inline bool overlay_supported(std::string_view policy) {
    return policy == "huber_ucb" || policy == "seq_huber_ucb";
}

/*
 * M seeded episodes merged in replication order. Pull counts are summed as
 * integers, so mean_regret[t] is exactly regret_decomposition(gaps, T_hat(t)).
 */
inline RegretCurve monte_carlo_regret(const BanditEnv& env, std::string_view policy,
                                      const PolicyParams& params, std::size_t horizon,
                                      std::size_t reps, std::uint64_t seed, unsigned threads = 0,
                                      bool overlay = false) {
    if (horizon == 0 || reps == 0) {
        throw std::invalid_argument("monte_carlo_regret needs horizon >= 1 and reps >= 1");
    }
    std::vector<Episode> episodes(reps);
    parallel_for(reps, threads, [&](std::size_t m) {
        episodes[m] = run_episode(env, policy, params, horizon, seed, m);
    });

    const std::size_t k = env.size();
    const auto& gaps = env.gaps();
    RegretCurve curve;
    curve.label = std::string(policy);
    curve.reps = reps;
    curve.mean_regret.resize(horizon);
    curve.stderr_regret.resize(horizon);

    std::vector<std::uint64_t> count_sums(k, 0);
    std::vector<double> per_rep(reps, 0.0);
    std::vector<double> t_hat(k);
    const double M = static_cast<double>(reps);
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t m = 0; m < reps; ++m) {
            const auto a = episodes[m].arms[t];
            ++count_sums[a];
            per_rep[m] += gaps[a];
        }
        for (std::size_t i = 0; i < k; ++i) t_hat[i] = static_cast<double>(count_sums[i]) / M;
        curve.mean_regret[t] = regret_decomposition(gaps, t_hat);
        if (reps > 1) {
            double ss = 0.0;
            for (const double r : per_rep) {
                const double d = r - curve.mean_regret[t];
                ss += d * d;
            }
            curve.stderr_regret[t] = std::sqrt(ss / (M - 1.0)) / std::sqrt(M);
        } else {
            curve.stderr_regret[t] = 0.0;
        }
    }
    curve.mean_pulls = t_hat;
    if (overlay) {
        curve.overlay.resize(horizon);
        for (std::size_t t = 0; t < horizon; ++t) {
            curve.overlay[t] = overlay_supported(policy)
                                   ? bound_overlay_at(env, policy, params, t + 1)
                                   : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return curve;
}

/// One curve per configured policy.
inline std::vector<RegretCurve> monte_carlo_regret(const ExperimentConfig& c) {
    c.validate();
    const BanditEnv env = build_env(c);
    const PolicyParams params = policy_params(c);
    std::vector<RegretCurve> out;
    for (const auto& name : c.policies) {
        out.push_back(
            monte_carlo_regret(env, name, params, c.horizon, c.reps, c.seed, c.threads, c.overlay));
    }
    return out;
}

inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// One curve per (policy, axis value); every value reuses the same seeds.
inline std::vector<RegretCurve> sweep(const ExperimentConfig& c) {
    c.validate();
    if (c.sweep_axis.empty() || c.sweep_values.empty()) {
        throw std::invalid_argument("sweep needs an axis and at least one value");
    }
    const BanditEnv env = build_env(c);
    std::vector<RegretCurve> out;
    for (const double v : c.sweep_values) {
        PolicyParams params = policy_params(c);
        if (c.sweep_axis == "beta") {
            params.beta_mult = v;
        } else {
            params.eps_assumed = v;
        }
        for (const auto& name : c.policies) {
            RegretCurve curve = monte_carlo_regret(env, name, params, c.horizon, c.reps, c.seed,
                                                   c.threads, c.overlay);
            curve.label = name + "[" + c.sweep_axis + "=" + format_number(v) + "]";
            out.push_back(std::move(curve));
        }
    }
    return out;
}

// ---------------------------------------------------------------- output

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    if (p == csv) p += ".json";
    return p;
}

inline void write_csv(std::ostream& os, const std::vector<RegretCurve>& curves, bool overlay) {
    os << "step,policy,mean_regret,stderr";
    if (overlay) os << ",bound_overlay";
    os << '\n';
    for (const auto& c : curves) {
        for (std::size_t t = 0; t < c.mean_regret.size(); ++t) {
            os << (t + 1) << ',' << c.label << ',' << format_number(c.mean_regret[t]) << ','
               << format_number(c.stderr_regret[t]);
            if (overlay) {
                const double v = t < c.overlay.size() ? c.overlay[t]
                                                      : std::numeric_limits<double>::quiet_NaN();
                os << ',' << format_number(v);
            }
            os << '\n';
        }
    }
}

/// Writes the CSV and a JSON sidecar holding the config, seed and summary.
inline void emit_results(const std::vector<RegretCurve>& curves, const ExperimentConfig& config,
                         const std::filesystem::path& path) {
    {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write results to " + path.string());
        write_csv(os, curves, config.overlay);
        if (!os) throw std::runtime_error("error while writing " + path.string());
    }
    json meta;
    meta["config"] = config_to_json(config);
    meta["seed"] = config.seed;
    meta["replication_keys"] = "(seed, replication, step, lane)";
    json summary = json::array();
    for (const auto& c : curves) {
        summary.push_back({{"policy", c.label},
                           {"final_regret", c.mean_regret.empty() ? 0.0 : c.mean_regret.back()},
                           {"final_stderr",
                            c.stderr_regret.empty() ? 0.0 : c.stderr_regret.back()},
                           {"mean_pulls", c.mean_pulls},
                           {"reps", c.reps}});
    }
    meta["curves"] = summary;
    const auto side = sidecar_path(path);
    std::ofstream ms(side);
    if (!ms) throw std::runtime_error("cannot write metadata to " + side.string());
    ms << meta.dump(2) << '\n';
}

struct CsvRow {
    std::size_t step = 0;
    std::string policy;
    double mean_regret = 0.0;
    double stderr_regret = 0.0;
    std::optional<double> bound_overlay;
};

inline std::vector<CsvRow> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    const bool has_overlay = line.find("bound_overlay") != std::string::npos;
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        CsvRow r;
        std::getline(ss, field, ',');
        r.step = std::stoull(field);
        std::getline(ss, r.policy, ',');
        std::getline(ss, field, ',');
        r.mean_regret = std::strtod(field.c_str(), nullptr);
        std::getline(ss, field, ',');
        r.stderr_regret = std::strtod(field.c_str(), nullptr);
        if (has_overlay && std::getline(ss, field, ',')) {
            r.bound_overlay = std::strtod(field.c_str(), nullptr);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace cbandits
