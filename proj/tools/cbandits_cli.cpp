// Command line front end: run, sweep, bounds, estimate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbandits/cbandits.hpp"

namespace {

using namespace cbandits;

struct Overrides {
    std::string config;
    std::string env;
    std::string policy;
    std::optional<double> eps_true;
    std::optional<double> eps_assumed;
    std::optional<double> beta_mult;
    std::optional<double> bias_coef;
    std::string p_rule;
    std::optional<double> p_value;
    std::string sigma_mode;
    std::optional<std::size_t> horizon;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    bool overlay = false;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file; flags override its values");
    cmd->add_option("--env", o.env, "preset: bernoulli, student, pareto, weibull");
    cmd->add_option("--policy", o.policy, "policy name or comma-separated list");
    cmd->add_option("--eps-true", o.eps_true, "corruption rate of the environment");
    cmd->add_option("--eps-assumed", o.eps_assumed, "corruption rate assumed by the policy");
    cmd->add_option("--beta-mult", o.beta_mult, "beta as a multiple of sigma");
    cmd->add_option("--bias-coef", o.bias_coef, "bias bound b = coef * sigma^2 / beta");
    cmd->add_option("--p-rule", o.p_rule, "auto, exact, chebyshev or fixed");
    cmd->add_option("--p-value", o.p_value, "p used by the fixed rule");
    cmd->add_option("--sigma-mode", o.sigma_mode, "known or mad");
    cmd->add_option("--horizon", o.horizon, "steps per episode");
    cmd->add_option("--reps", o.reps, "Monte-Carlo replications");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--out", o.out, "CSV output path (a .json sidecar is written next to it)");
    cmd->add_flag("--overlay", o.overlay, "add the theoretical bound column");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (!o.env.empty()) {
        c.env = o.env;
        c.arms.clear();
    }
    if (!o.policy.empty()) c.policies = split_list(o.policy);
    if (o.eps_true) c.eps_true = *o.eps_true;
    if (o.eps_assumed) c.eps_assumed = *o.eps_assumed;
    if (o.beta_mult) c.beta_mult = *o.beta_mult;
    if (o.bias_coef) c.bias_coef = *o.bias_coef;
    if (!o.p_rule.empty()) c.p_rule = parse_p_rule(o.p_rule);
    if (o.p_value) c.p_value = *o.p_value;
    if (!o.sigma_mode.empty()) c.sigma_mode = parse_sigma_mode(o.sigma_mode);
    if (o.horizon) c.horizon = *o.horizon;
    if (o.reps) c.reps = *o.reps;
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    if (!o.out.empty()) c.out = o.out;
    if (o.overlay) c.overlay = true;
    return c;
}

void report(const std::vector<RegretCurve>& curves, const ExperimentConfig& c) {
    if (c.out.empty()) {
        write_csv(std::cout, curves, c.overlay);
        return;
    }
    emit_results(curves, c, c.out);
    for (const auto& curve : curves) {
        std::fprintf(stderr, "%-40s final regret %.6g (stderr %.3g)\n", curve.label.c_str(),
                     curve.mean_regret.back(), curve.stderr_regret.back());
    }
    std::fprintf(stderr, "wrote %s and %s\n", c.out.c_str(),
                 sidecar_path(c.out).string().c_str());
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        g.push_back(lo * std::pow(hi / lo, u));
    }
    return g;
}

std::string num(double x) { return format_number(x); }

void bounds_kl(std::ostream& os, double sigma, double eps, std::size_t points) {
    os << "delta,kl_exact,uniform,high_regime,high_regime_stated,low_regime\n";
    for (const double d : log_grid(1e-3 * sigma, 2.0 * sigma * 0.999, points)) {
        const auto b = kl_corrupted_bernoulli_bounds(d, sigma, eps);
        os << num(d) << ',' << num(kl_corrupted_bernoulli_exact_gap(d, sigma, eps)) << ','
           << num(b.uniform) << ',' << (b.high_regime ? num(*b.high_regime) : "") << ','
           << (b.high_regime_stated ? num(*b.high_regime_stated) : "") << ','
           << (b.low_regime ? 1 : 0) << '\n';
    }
}

void bounds_lower(std::ostream& os, double sigma, double eps, std::size_t points) {
    os << "delta,student,bernoulli\n";
    for (const double d : log_grid(1e-2 * sigma, 1e2 * sigma, points)) {
        os << num(d) << ',' << num(lower_bound_pulls_student(d, sigma)) << ','
           << num(lower_bound_pulls_bernoulli(d, sigma, eps)) << '\n';
    }
}

void bounds_upper(std::ostream& os, double sigma, double eps, double p, std::size_t n,
                  std::size_t points) {
    os << "delta,huberucb,huberucb_simplified,seqhuberucb\n";
    const HuberConfig cfg(4.0 * sigma, sigma, eps, p);
    auto safe = [](auto f) {
        try {
            return num(f());
        } catch (const std::domain_error&) {
            return std::string("inf");
        }
    };
    for (const double d : log_grid(1e-2 * sigma, 1e3 * sigma, points)) {
        os << num(d) << ',' << safe([&] { return upper_bound_pulls_huberucb(n, d, cfg); }) << ','
           << safe([&] { return upper_bound_pulls_huberucb_simplified(n, d, sigma, eps, p); })
           << ',' << safe([&] { return upper_bound_pulls_seqhuberucb(n, d, sigma, eps, p); })
           << '\n';
    }
}

std::vector<double> read_reals(std::istream& in) {
    std::vector<double> xs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t used = 0;
        const double x = std::stod(line, &used);
        xs.push_back(x);
    }
    return xs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bandits with heavy-tailed, stochastically corrupted rewards"};
    app.require_subcommand(1);

    Overrides run_o;
    auto* run = app.add_subcommand("run", "Monte-Carlo regret of one or more policies");
    add_experiment_flags(run, run_o);

    Overrides sweep_o;
    std::string axis;
    std::vector<double> values;
    auto* sw = app.add_subcommand("sweep", "beta or eps ablation");
    add_experiment_flags(sw, sweep_o);
    sw->add_option("--axis", axis, "beta or eps")->check(CLI::IsMember({"beta", "eps"}));
    sw->add_option("--values", values, "axis values")->delimiter(',');

    std::string table = "kl";
    double b_sigma = 1.0, b_eps = 0.2, b_p = 0.75;
    std::size_t b_n = 10000, b_points = 50;
    std::string b_out;
    auto* bounds = app.add_subcommand("bounds", "tables of the KL, lower and upper bounds");
    bounds->add_option("--table", table, "kl, lower or upper")
        ->check(CLI::IsMember({"kl", "lower", "upper"}));
    bounds->add_option("--sigma", b_sigma, "standard deviation");
    bounds->add_option("--eps", b_eps, "corruption rate");
    bounds->add_option("--p", b_p, "concentration probability (upper table)");
    bounds->add_option("--n", b_n, "horizon (upper table)");
    bounds->add_option("--points", b_points, "grid size");
    bounds->add_option("--out", b_out, "CSV path (stdout if omitted)");

    std::string e_file = "-", e_kind = "huber";
    double e_beta = 1.0, e_sigma = 1.0, e_scale = 1.0;
    std::size_t e_blocks = 1;
    auto* est = app.add_subcommand("estimate", "robust mean of newline-separated reals");
    est->add_option("file", e_file, "input file, '-' for stdin");
    est->add_option("--estimator", e_kind, "huber, seqhub, catoni, mom, mean, median, mad")
        ->check(CLI::IsMember({"huber", "seqhub", "catoni", "mom", "mean", "median", "mad"}));
    est->add_option("--beta", e_beta, "Huber threshold");
    est->add_option("--sigma", e_sigma, "scale for catoni");
    est->add_option("--scale", e_scale, "catoni beta = scale * sigma * sqrt(n)");
    est->add_option("--blocks", e_blocks, "median-of-means blocks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const ExperimentConfig c = resolve(run_o);
            report(monte_carlo_regret(c), c);
        } else if (*sw) {
            ExperimentConfig c = resolve(sweep_o);
            if (!axis.empty()) c.sweep_axis = axis;
            if (!values.empty()) c.sweep_values = values;
            report(sweep(c), c);
        } else if (*bounds) {
            std::ofstream file;
            if (!b_out.empty()) {
                file.open(b_out);
                if (!file) throw std::runtime_error("cannot write " + b_out);
            }
            std::ostream& os = b_out.empty() ? std::cout : file;
            if (table == "kl") {
                bounds_kl(os, b_sigma, b_eps, b_points);
            } else if (table == "lower") {
                bounds_lower(os, b_sigma, b_eps, b_points);
            } else {
                bounds_upper(os, b_sigma, b_eps, b_p, b_n, b_points);
            }
        } else if (*est) {
            std::vector<double> xs;
            if (e_file == "-") {
                xs = read_reals(std::cin);
            } else {
                std::ifstream in(e_file);
                if (!in) throw std::runtime_error("cannot open " + e_file);
                xs = read_reals(in);
            }
            if (xs.empty()) throw std::runtime_error("no samples in input");
            double v = 0.0;
            if (e_kind == "huber") {
                v = huber_estimate(xs, InfluenceParams(e_beta));
            } else if (e_kind == "seqhub") {
                SeqHuber s{InfluenceParams(e_beta)};
                for (const double x : xs) s.update(x);
                v = s.value();
            } else if (e_kind == "catoni") {
                v = catoni_estimate(xs, e_sigma, e_scale);
            } else if (e_kind == "mom") {
                v = median_of_means(xs, e_blocks);
            } else if (e_kind == "mean") {
                v = mean(xs);
            } else if (e_kind == "median") {
                v = median(xs);
            } else {
                v = mad_scale(xs);
            }
            std::printf("%.17g\n", v);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
