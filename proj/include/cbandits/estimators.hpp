#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbandits {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Clipping threshold of the Huber influence function.
class InfluenceParams {
public:
    explicit InfluenceParams(double beta) : beta_(beta) {
        if (!(beta > 0.0) || !std::isfinite(beta)) {
            throw std::invalid_argument("influence threshold beta must be positive and finite");
        }
    }
    double beta() const noexcept { return beta_; }

private:
    double beta_;
};

/// x on [-beta, beta], saturating at +-beta outside.
inline double psi(double x, InfluenceParams params) noexcept {
    const double b = params.beta();
    return x > b ? b : (x < -b ? -b : x);
}

/// Indicator of the unclipped region; the boundary counts as unclipped.
inline double psi_prime(double x, InfluenceParams params) noexcept {
    return std::abs(x) <= params.beta() ? 1.0 : 0.0;
}

/// Huber loss whose derivative is psi.
inline double huber_loss(double x, InfluenceParams params) noexcept {
    const double b = params.beta();
    const double a = std::abs(x);
    return a <= b ? 0.5 * x * x : b * (a - 0.5 * b);
}

/// Largest power of two not exceeding t.
inline std::size_t p2_floor(std::size_t t) {
    if (t == 0) {
        throw std::invalid_argument("p2_floor requires t >= 1");
    }
    return std::bit_floor(t);
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) {
        throw std::invalid_argument("mean of an empty sample");
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Even counts return the midpoint of the two central order statistics.
inline double median(std::span<const double> xs) {
    if (xs.empty()) {
        throw std::invalid_argument("median of an empty sample");
    }
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Root tolerance of the Huber influence equation for a sample of size n.
inline double huber_root_tolerance(std::size_t n, InfluenceParams params) noexcept {
    return 1e-9 * static_cast<double>(n) * std::max(params.beta(), 1.0);
}

struct InfluenceSums {
    double psi_sum = 0.0;
    double psi_prime_sum = 0.0;
};

inline InfluenceSums influence_sums(std::span<const double> xs, double theta,
                                    InfluenceParams params) noexcept {
    const double b = params.beta();
    InfluenceSums s;
    for (const double x : xs) {
        const double r = x - theta;
        if (r > b) {
            s.psi_sum += b;
        } else if (r < -b) {
            s.psi_sum -= b;
        } else {
            s.psi_sum += r;
            s.psi_prime_sum += 1.0;
        }
    }
    return s;
}

/*
 * Huber M-estimate: a root of theta -> sum_i psi(x_i - theta).
 *
 * The map is continuous and nonincreasing, positive at min(x) and negative at
 * max(x) unless the sample is constant. We keep a sign bracket and take Newton
 * steps (derivative = -#unclipped residuals) whenever they land strictly inside
 * it, bisecting otherwise or when the bracket fails to halve. On piecewise
 * linear data Newton is exact once the unclipped set stops changing, so a
 * good starting point (the previous estimate in a bandit loop) typically
 * converges in two or three passes.
 */
inline double huber_estimate(std::span<const double> xs, InfluenceParams params,
                             std::optional<double> start = std::nullopt) {
    if (xs.empty()) {
        throw std::invalid_argument("huber_estimate of an empty sample");
    }
    const auto [min_it, max_it] = std::minmax_element(xs.begin(), xs.end());
    double lo = *min_it;
    double hi = *max_it;
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("huber_estimate requires finite samples");
    }
    if (lo == hi) {
        return lo;
    }
    const double tol = huber_root_tolerance(xs.size(), params);

    double theta;
    if (start && *start >= lo && *start <= hi) {
        theta = *start;
    } else {
        theta = median(xs);
    }

    constexpr int max_iterations = 200;
    double width_at_check = hi - lo;
    int since_check = 0;
    double best_theta = theta;
    double best_abs = std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iterations; ++it) {
        const InfluenceSums s = influence_sums(xs, theta, params);
        const double f = s.psi_sum;
        if (std::abs(f) < best_abs) {
            best_abs = std::abs(f);
            best_theta = theta;
        }
        if (std::abs(f) <= tol) {
            return theta;
        }
        if (f > 0.0) {
            lo = theta;
        } else {
            hi = theta;
        }
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            // Bracket has collapsed to adjacent doubles; no finer root exists.
            return best_theta;
        }

        if (++since_check >= 2) {
            const bool halved = (hi - lo) <= 0.5 * width_at_check;
            width_at_check = hi - lo;
            since_check = 0;
            if (!halved) {
                theta = mid;
                continue;
            }
        }
        if (s.psi_prime_sum > 0.0) {
            const double candidate = theta + f / s.psi_prime_sum;
            theta = (candidate > lo && candidate < hi) ? candidate : mid;
        } else {
            theta = mid;
        }
    }
    throw SolverError("huber_estimate did not reach tolerance " + std::to_string(tol) +
                      " within " + std::to_string(max_iterations) + " iterations");
}

/// Heavy-tail tuning of the Huber threshold: scale * sigma * sqrt(n).
inline double catoni_beta(std::size_t n, double sigma, double scale = 1.0) {
    if (!(sigma > 0.0) || !(scale > 0.0) || n == 0) {
        throw std::invalid_argument("catoni_beta requires n >= 1, sigma > 0, scale > 0");
    }
    return scale * sigma * std::sqrt(static_cast<double>(n));
}

inline double catoni_estimate(std::span<const double> xs, double sigma, double scale = 1.0,
                              std::optional<double> start = std::nullopt) {
    if (xs.empty()) {
        throw std::invalid_argument("catoni_estimate of an empty sample");
    }
    return huber_estimate(xs, InfluenceParams(catoni_beta(xs.size(), sigma, scale)), start);
}

/// Median of the means of `blocks` contiguous blocks; the first n % blocks
/// blocks get one extra sample.
inline double median_of_means(std::span<const double> xs, std::size_t blocks) {
    if (blocks == 0 || blocks > xs.size()) {
        throw std::invalid_argument("median_of_means requires 1 <= blocks <= n");
    }
    const std::size_t base = xs.size() / blocks;
    const std::size_t extra = xs.size() % blocks;
    std::vector<double> block_means;
    block_means.reserve(blocks);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t len = base + (b < extra ? 1 : 0);
        block_means.push_back(mean(xs.subspan(pos, len)));
        pos += len;
    }
    return median(block_means);
}

inline constexpr double mad_consistency = 1.4826;

/// Gaussian-consistent median absolute deviation.
inline double mad_scale(std::span<const double> xs) {
    const double m = median(xs);
    std::vector<double> dev;
    dev.reserve(xs.size());
    for (const double x : xs) {
        dev.push_back(std::abs(x - m));
    }
    return mad_consistency * median(dev);
}

/*
 * Streaming first-order approximation of the Huber estimate.
 *
 * At counts that are powers of two the anchor is the batch estimate of the
 * whole buffer. In between, the estimate is
 *     anchor + sum_{i > P2(t)} psi(x_i - anchor) / sum_{i <= t} psi'(x_i - anchor),
 * i.e. one Newton step of the influence equation started at the anchor. The
 * numerator skips the anchor's own samples since they sum to zero there.
 */
class SeqHuber {
public:
    explicit SeqHuber(InfluenceParams params) : params_(params) {}

    void update(double x) {
        buffer_.push_back(x);
        const std::size_t t = buffer_.size();
        if (t == p2_floor(t)) {
            // Cold start on purpose: the root set can be an interval, and a warm
            // start may land elsewhere in it than the batch estimate does.
            anchor_ = huber_estimate(buffer_, params_);
            batch_touches_ += t;
            psi_sum_ = 0.0;
            psi_prime_sum_ = influence_sums(buffer_, anchor_, params_).psi_prime_sum;
        } else {
            psi_sum_ += psi(x - anchor_, params_);
            psi_prime_sum_ += psi_prime(x - anchor_, params_);
        }
    }

    /// Zero before the first sample.
    double value() const noexcept {
        const std::size_t t = buffer_.size();
        if (t == 0) {
            return 0.0;
        }
        if (t == std::bit_floor(t)) {
            return anchor_;
        }
        return corrected_value(anchor_, psi_sum_, psi_prime_sum_);
    }

    /// An empty linearization denominator carries no local information, so
    /// the anchor is returned unchanged.
    static double corrected_value(double anchor, double psi_sum, double psi_prime_sum) noexcept {
        if (psi_prime_sum <= 0.0) {
            return anchor;
        }
        return anchor + psi_sum / psi_prime_sum;
    }

    std::size_t count() const noexcept { return buffer_.size(); }
    double anchor() const noexcept { return anchor_; }
    double psi_sum() const noexcept { return psi_sum_; }
    double psi_prime_sum() const noexcept { return psi_prime_sum_; }
    std::span<const double> samples() const noexcept { return buffer_; }
    InfluenceParams params() const noexcept { return params_; }

    /// Total sample count handed to the batch solver so far.
    std::size_t batch_sample_touches() const noexcept { return batch_touches_; }

private:
    InfluenceParams params_;
    std::vector<double> buffer_;
    double anchor_ = 0.0;
    double psi_sum_ = 0.0;
    double psi_prime_sum_ = 0.0;
    std::size_t batch_touches_ = 0;
};

}  // namespace cbandits
