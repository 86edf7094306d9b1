#pragma once

#include <cstdint>
#include <limits>

namespace cbandits {

// Counter-based random streams. A stream is identified by a key
// (seed, replication, step, lane); the same key always yields the same
// sequence, independent of the order in which other streams are consumed.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_key(std::uint64_t seed, std::uint64_t replication,
                                       std::uint64_t step, std::uint64_t lane) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ replication);
    h = splitmix64(h ^ (step * 0xD6E8FEB86659FD93ULL));
    return splitmix64(h ^ (lane + 0xA0761D6478BD642FULL));
}

/// Which independent sub-stream of a step a draw belongs to.
enum class Lane : std::uint64_t { environment = 0, policy = 1 };

/// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr StreamRng(std::uint64_t state) noexcept : state_(state) {}

    constexpr StreamRng(std::uint64_t seed, std::uint64_t replication, std::uint64_t step,
                        Lane lane) noexcept
        : state_(mix_key(seed, replication, step, static_cast<std::uint64_t>(lane))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1); safe for logarithms and inverse CDFs.
    constexpr double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

}  // namespace cbandits
