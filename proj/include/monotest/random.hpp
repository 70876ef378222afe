#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), which makes bootstrap panels and Monte Carlo replications
// reproducible independent of thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace monotest {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Matches the Random123 reference output.
class Philox4x32 {
public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    constexpr explicit Philox4x32(key_type key) noexcept : key_(key) {}
    constexpr explicit Philox4x32(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr counter_type operator()(counter_type ctr) const noexcept {
        key_type key = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    constexpr key_type key() const noexcept { return key_; }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    key_type key_;
};

/// SplitMix64 finalizer; used to derive independent seeds from structured ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
    return mix64(mix64(mix64(seed) ^ a) ^ (b * 0xD6E8FEB86659FD93ull));
}

namespace detail {

// Open interval (0,1) from 52 random bits; with 53 the top value rounds to 1.
constexpr double unit_open(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

// Box-Muller on one Philox block: two independent N(0,1) values.
inline std::pair<double, double> normal_pair(const Philox4x32::counter_type& block) noexcept {
    const double u1 = unit_open(block[0], block[1]);
    const double u2 = unit_open(block[2], block[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace detail

/// Stream domains keep unrelated consumers of one seed from overlapping.
enum class StreamDomain : std::uint32_t {
    multipliers = 0,
    selection_fallback = 1,
    simulation = 2,
};

/// Sequential view over a counter-based generator: draw k of the stream is a
/// pure function of (seed, domain, stream id, k).
class CounterStream {
public:
    CounterStream(std::uint64_t seed, StreamDomain domain, std::uint32_t stream_id = 0) noexcept
        : gen_(seed), domain_(static_cast<std::uint32_t>(domain)), stream_id_(stream_id) {}

    double uniform() noexcept {
        const auto block = next_block();
        return detail::unit_open(block[0], block[1]);
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const auto [a, b] = detail::normal_pair(next_block());
        spare_ = b;
        has_spare_ = true;
        return a;
    }

    /// Uniform integer in [0, bound), bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound)) % bound;
    }

private:
    Philox4x32::counter_type next_block() noexcept {
        const std::uint64_t k = index_++;
        return gen_({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32), stream_id_, domain_});
    }

    Philox4x32 gen_;
    std::uint32_t domain_;
    std::uint32_t stream_id_;
    std::uint64_t index_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// The bootstrap multiplier epsilon_{i,b}: observation i, draw b.
inline double multiplier(const Philox4x32& gen, std::uint32_t i, std::uint32_t b) noexcept {
    const auto block = gen({i, b >> 1, 0u, static_cast<std::uint32_t>(StreamDomain::multipliers)});
    const auto [a, c] = detail::normal_pair(block);
    return (b & 1u) ? c : a;
}

} // namespace monotest
