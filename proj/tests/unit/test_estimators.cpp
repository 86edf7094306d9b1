#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cbandits/estimators.hpp"
#include "cbandits/rng.hpp"

using namespace cbandits;

namespace {

// Brute-force minimizer of sum rho(x_i - theta) on a uniform grid.
double grid_argmin_huber_loss(const std::vector<double>& xs, double beta, double lo, double hi,
                              double step) {
    const InfluenceParams params(beta);
    double best_theta = lo;
    double best = std::numeric_limits<double>::infinity();
    const auto steps = static_cast<long>(std::llround((hi - lo) / step));
    for (long i = 0; i <= steps; ++i) {
        const double theta = lo + static_cast<double>(i) * step;
        double loss = 0.0;
        for (const double x : xs) loss += huber_loss(x - theta, params);
        if (loss < best) {
            best = loss;
            best_theta = theta;
        }
    }
    return best_theta;
}

double influence_residual(const std::vector<double>& xs, double theta, double beta) {
    return influence_sums(xs, theta, InfluenceParams(beta)).psi_sum;
}

std::vector<double> gaussian_sample(std::size_t n, std::uint64_t seed, double mu = 0.0,
                                    double sd = 1.0) {
    StreamRng rng(seed);
    std::normal_distribution<double> dist(mu, sd);
    std::vector<double> xs(n);
    for (auto& x : xs) x = dist(rng);
    return xs;
}

}  // namespace

TEST(Psi, IdentityInsideAndClippedOutside) {
    const InfluenceParams one(1.0);
    EXPECT_DOUBLE_EQ(psi(0.5, one), 0.5);
    EXPECT_DOUBLE_EQ(psi(-3.0, one), -1.0);
    EXPECT_DOUBLE_EQ(psi(1.0, one), 1.0);
    const InfluenceParams b(2.5);
    EXPECT_DOUBLE_EQ(psi(2.5, b), 2.5);
    EXPECT_DOUBLE_EQ(psi(-7.0, b), -2.5);
}

TEST(Psi, OddAndBounded) {
    const InfluenceParams b(0.7);
    for (double x = -5.0; x <= 5.0; x += 0.13) {
        EXPECT_DOUBLE_EQ(psi(-x, b), -psi(x, b));
        EXPECT_LE(std::abs(psi(x, b)), 0.7);
    }
}

TEST(PsiPrime, ClosedIntervalConvention) {
    const InfluenceParams one(1.0);
    EXPECT_EQ(psi_prime(0.0, one), 1.0);
    EXPECT_EQ(psi_prime(2.0, one), 0.0);
    EXPECT_EQ(psi_prime(1.0, one), 1.0);
    EXPECT_EQ(psi_prime(-1.0, one), 1.0);
}

TEST(InfluenceParams, RejectsNonPositiveBeta) {
    EXPECT_THROW(InfluenceParams(0.0), std::invalid_argument);
    EXPECT_THROW(InfluenceParams(-1.0), std::invalid_argument);
    EXPECT_THROW(InfluenceParams(std::numeric_limits<double>::infinity()), std::invalid_argument);
    EXPECT_THROW(InfluenceParams(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(HuberEstimate, SymmetricPairGivesZero) {
    for (const double beta : {0.1, 1.0, 10.0}) {
        EXPECT_NEAR(huber_estimate(std::vector<double>{-1.0, 1.0}, InfluenceParams(beta)), 0.0,
                    1e-12);
    }
}

TEST(HuberEstimate, LargeBetaGivesMean) {
    const std::vector<double> xs{0, 1, 2, 3};
    EXPECT_NEAR(huber_estimate(xs, InfluenceParams(100.0)), 1.5, 1e-9);
}

TEST(HuberEstimate, MatchesGridSearchOracle) {
    const std::vector<double> xs{0, 0, 0, 10};
    const double theta = huber_estimate(xs, InfluenceParams(1.0));
    const double oracle = grid_argmin_huber_loss(xs, 1.0, 0.0, 10.0, 1e-6);
    EXPECT_NEAR(theta, oracle, 1e-5);
}

TEST(HuberEstimate, ConstantSampleShortCircuits) {
    const std::vector<double> xs(17, 3.25);
    EXPECT_EQ(huber_estimate(xs, InfluenceParams(0.5)), 3.25);
}

TEST(HuberEstimate, EmptyAndNonFiniteRejected) {
    EXPECT_THROW(huber_estimate(std::vector<double>{}, InfluenceParams(1.0)),
                 std::invalid_argument);
    EXPECT_THROW(huber_estimate(std::vector<double>{1.0, std::numeric_limits<double>::infinity()},
                                InfluenceParams(1.0)),
                 std::invalid_argument);
}

TEST(HuberEstimate, RootContractAndRange) {
    StreamRng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 500);
        std::vector<double> xs = gaussian_sample(n, 1000 + trial);
        for (auto& x : xs) {
            if (rng.uniform() < 0.1) x = 1e4 * (rng.uniform() - 0.3);
        }
        const double beta = 0.01 + 5.0 * rng.uniform();
        const double theta = huber_estimate(xs, InfluenceParams(beta));
        const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
        EXPECT_GE(theta, *mn);
        EXPECT_LE(theta, *mx);
        EXPECT_LE(std::abs(influence_residual(xs, theta, beta)),
                  huber_root_tolerance(n, InfluenceParams(beta)));
    }
}

TEST(HuberEstimate, WarmStartGivesSameRoot) {
    const auto xs = gaussian_sample(300, 9);
    const InfluenceParams b(0.8);
    const double cold = huber_estimate(xs, b);
    const double warm = huber_estimate(xs, b, cold + 0.3);
    EXPECT_NEAR(cold, warm, 2.0 * huber_root_tolerance(xs.size(), b));
    // A start outside the sample range falls back to the median.
    EXPECT_NEAR(huber_estimate(xs, b, 1e9), cold, 2.0 * huber_root_tolerance(xs.size(), b));
}

TEST(HuberEstimate, TranslationEquivariance) {
    const auto xs = gaussian_sample(200, 5);
    const InfluenceParams b(1.3);
    const double base = huber_estimate(xs, b);
    for (const double c : {-1000.0, -3.5, 0.25, 77.0}) {
        std::vector<double> shifted(xs);
        for (auto& x : shifted) x += c;
        const double tol = 2.0 * huber_root_tolerance(xs.size(), b) / static_cast<double>(xs.size());
        // The shift itself rounds each sample; allow for that on top of the root tolerance.
        EXPECT_NEAR(huber_estimate(shifted, b), base + c, tol + 1e-12 * std::abs(c) * 10);
    }
}

TEST(HuberEstimate, ScaleEquivariance) {
    const auto xs = gaussian_sample(150, 6);
    const double base = huber_estimate(xs, InfluenceParams(0.9));
    for (const double c : {0.01, 0.5, 3.0, 250.0}) {
        std::vector<double> scaled(xs);
        for (auto& x : scaled) x *= c;
        const double tol = huber_root_tolerance(xs.size(), InfluenceParams(0.9 * c)) /
                           static_cast<double>(xs.size());
        EXPECT_NEAR(huber_estimate(scaled, InfluenceParams(0.9 * c)), c * base, 2.0 * tol);
    }
}

TEST(HuberEstimate, SmallBetaApproachesMedian) {
    const std::vector<double> xs{0.3, 1.9, 2.2, 4.0, 7.5, 9.1, 11.0};
    const double spread = 11.0 - 0.3;
    const double theta = huber_estimate(xs, InfluenceParams(1e-6 * spread));
    std::vector<double> sorted(xs);
    std::sort(sorted.begin(), sorted.end());
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sorted.size(); ++i) min_gap = std::min(min_gap, sorted[i] - sorted[i - 1]);
    EXPECT_NEAR(theta, median(xs), min_gap);
}

TEST(HuberEstimate, MonotoneInEachSample) {
    auto xs = gaussian_sample(60, 11);
    const InfluenceParams b(0.5);
    for (std::size_t i = 0; i < xs.size(); i += 7) {
        double prev = huber_estimate(xs, b);
        const double keep = xs[i];
        for (const double bump : {0.1, 0.5, 2.0, 20.0}) {
            xs[i] = keep + bump;
            const double now = huber_estimate(xs, b);
            EXPECT_GE(now, prev - 2.0 * huber_root_tolerance(xs.size(), b));
            prev = now;
        }
        xs[i] = keep;
    }
}

TEST(HuberEstimate, InfluenceVarianceDominatedBySampleVariance) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto xs = gaussian_sample(100, seed, 0.0, 2.0);
        xs[0] = 500.0;
        const InfluenceParams b(1.0);
        const double theta = huber_estimate(xs, b);
        std::vector<double> infl;
        for (const double x : xs) infl.push_back(psi(x - theta, b));
        auto var = [](const std::vector<double>& v) {
            const double m = mean(v);
            double s = 0.0;
            for (const double x : v) s += (x - m) * (x - m);
            return s / static_cast<double>(v.size());
        };
        EXPECT_LE(var(infl), var(xs));
    }
}

TEST(P2Floor, Examples) {
    EXPECT_EQ(p2_floor(1), 1u);
    EXPECT_EQ(p2_floor(5), 4u);
    EXPECT_EQ(p2_floor(8), 8u);
    EXPECT_EQ(p2_floor(1023), 512u);
    EXPECT_THROW(p2_floor(0), std::invalid_argument);
}

TEST(SeqHuber, InitialState) {
    SeqHuber s{InfluenceParams(1.0)};
    EXPECT_EQ(s.count(), 0u);
    EXPECT_EQ(s.value(), 0.0);
    EXPECT_TRUE(s.samples().empty());
    s.update(5.0);
    EXPECT_EQ(s.value(), 5.0);
}

TEST(SeqHuber, EqualsBatchAtPowersOfTwo) {
    const auto xs = gaussian_sample(1024, 77, 1.0, 3.0);
    const InfluenceParams b(2.0);
    SeqHuber s{b};
    for (std::size_t t = 1; t <= xs.size(); ++t) {
        s.update(xs[t - 1]);
        if (t == p2_floor(t)) {
            const std::vector<double> prefix(xs.begin(), xs.begin() + static_cast<long>(t));
            const double batch = huber_estimate(prefix, b);
            EXPECT_EQ(s.value(), s.anchor());
            EXPECT_EQ(s.value(), batch);
        }
    }
}

TEST(SeqHuber, AlternatingStreamStaysAtZero) {
    SeqHuber s{InfluenceParams(0.5)};
    for (int t = 1; t <= 64; ++t) {
        s.update(t % 2 == 1 ? -1.0 : 1.0);
        if (t % 2 == 0) {
            EXPECT_NEAR(s.value(), 0.0, 1e-12) << "t=" << t;
        }
    }
}

TEST(SeqHuber, LargeBetaTracksRunningMean) {
    const auto xs = gaussian_sample(100, 3);
    SeqHuber s{InfluenceParams(1e6)};
    double sum = 0.0;
    for (std::size_t t = 1; t <= xs.size(); ++t) {
        s.update(xs[t - 1]);
        sum += xs[t - 1];
        EXPECT_NEAR(s.value(), sum / static_cast<double>(t), 1e-10) << "t=" << t;
    }
}

TEST(SeqHuber, CorrectedValueArithmetic) {
    EXPECT_DOUBLE_EQ(SeqHuber::corrected_value(1.0, 0.5, 5.0), 1.1);
    EXPECT_EQ(SeqHuber::corrected_value(2.0, 0.7, 0.0), 2.0);
}

TEST(SeqHuber, StateInvariants) {
    const auto xs = gaussian_sample(300, 4);
    SeqHuber s{InfluenceParams(0.3)};
    for (const double x : xs) {
        s.update(x);
        EXPECT_EQ(s.samples().size(), s.count());
        EXPECT_GE(s.psi_prime_sum(), 0.0);
        EXPECT_LE(s.psi_prime_sum(), static_cast<double>(s.count()));
    }
}

TEST(SeqHuber, DenominatorCoversWholeBuffer) {
    const auto xs = gaussian_sample(37, 8);
    const InfluenceParams b(0.6);
    SeqHuber s{b};
    for (const double x : xs) s.update(x);
    const auto sums = influence_sums(xs, s.anchor(), b);
    EXPECT_NEAR(s.psi_prime_sum(), sums.psi_prime_sum, 0.0);
    // Numerator: samples after the anchor's prefix only.
    const std::vector<double> tail(xs.begin() + 32, xs.end());
    EXPECT_NEAR(s.psi_sum(), influence_sums(tail, s.anchor(), b).psi_sum, 1e-12);
}

TEST(SeqHuber, BatchTouchesAreLinear) {
    SeqHuber s{InfluenceParams(1.0)};
    const auto xs = gaussian_sample(5000, 12);
    for (const double x : xs) s.update(x);
    EXPECT_LE(s.batch_sample_touches(), 2 * xs.size());
}

TEST(Catoni, BetaArithmetic) {
    EXPECT_DOUBLE_EQ(catoni_beta(4, 1.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(catoni_beta(9, 2.0, 0.5), 3.0);
    EXPECT_THROW(catoni_beta(0, 1.0), std::invalid_argument);
}

TEST(Catoni, SymmetricSampleMatchesHuberWithSameBeta) {
    const std::vector<double> xs{-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
    const double beta = catoni_beta(xs.size(), 1.0);
    EXPECT_NEAR(catoni_estimate(xs, 1.0), huber_estimate(xs, InfluenceParams(beta)), 1e-12);
}

TEST(Catoni, HeavyTailTuningFollowsTheContamination) {
    // With sqrt(n) > 4 the sqrt(n) threshold clips less, so it sits closer to
    // the contaminated mean than a 4 sigma threshold does.
    std::vector<double> xs(99, 0.0);
    xs.push_back(1000.0);
    const double contaminated_mean = mean(xs);
    const double catoni = catoni_estimate(xs, 1.0);
    const double fixed = huber_estimate(xs, InfluenceParams(4.0));
    EXPECT_LT(std::abs(catoni - contaminated_mean), std::abs(fixed - contaminated_mean));
}

TEST(MedianOfMeans, Examples) {
    const std::vector<double> xs{1, 2, 3, 4, 5, 6};
    EXPECT_DOUBLE_EQ(median_of_means(xs, 1), 3.5);
    EXPECT_DOUBLE_EQ(median_of_means(xs, 6), median(xs));
    EXPECT_DOUBLE_EQ(median_of_means(xs, 3), 3.5);
    EXPECT_THROW(median_of_means(xs, 0), std::invalid_argument);
    EXPECT_THROW(median_of_means(xs, 7), std::invalid_argument);
}

TEST(MedianOfMeans, RemainderGoesToLeadingBlocks) {
    // Blocks {1,2}, {3,4}, {5}: means 1.5, 3.5, 5.
    const std::vector<double> xs{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(median_of_means(xs, 3), 3.5);
    // Blocks {10, 0}, {0}: means 5 and 0, even count takes the midpoint.
    EXPECT_DOUBLE_EQ(median_of_means(std::vector<double>{10, 0, 0}, 2), 2.5);
}

TEST(Median, EvenCountUsesMidpoint) {
    EXPECT_DOUBLE_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
    EXPECT_DOUBLE_EQ(median(std::vector<double>{7}), 7.0);
}

TEST(MadScale, Examples) {
    EXPECT_EQ(mad_scale(std::vector<double>(9, 2.0)), 0.0);
    EXPECT_EQ(mad_scale(std::vector<double>{0, 0, 0, 0, 100}), 0.0);
}

TEST(MadScale, ConsistentForGaussian) {
    const auto xs = gaussian_sample(100000, 2024);
    EXPECT_NEAR(mad_scale(xs), 1.0, 0.02);
}
