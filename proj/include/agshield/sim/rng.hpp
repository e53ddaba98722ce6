#pragma once

#include "agshield/core/error.hpp"

#include <bit>
#include <cstdint>
#include <span>

namespace agshield {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer applied to one 64-bit value.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += kGoldenGamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of episode `index` under `master`.
[[nodiscard]] constexpr std::uint64_t episode_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ ((index + 1) * kGoldenGamma));
}

/// SplitMix64 stream: state advances by the golden gamma, output is the mixed state.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        const std::uint64_t out = splitmix64(state_);
        state_ += kGoldenGamma;
        return out;
    }

    /// Uniform in [0, 1): the 53 high bits over 2^53.
    constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Index k with cumulative(weights, k-1) <= u * total < cumulative(weights, k); zero weights are never chosen.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw InvalidArgument("categorical: weights sum to zero");
        const double u = uniform() * total;
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (weights[k] <= 0.0) continue;
            acc += weights[k];
            last = k;
            if (u < acc) return k;
        }
        return last;
    }

    /// Uniform choice among the set bits of a nonzero mask.
    std::uint32_t pick_bit(std::uint64_t mask) {
        if (mask == 0) throw InvalidArgument("pick_bit: empty mask");
        auto k = static_cast<int>(uniform() * std::popcount(mask));
        for (; k > 0; --k) mask &= mask - 1;
        return static_cast<std::uint32_t>(std::countr_zero(mask));
    }

    [[nodiscard]] constexpr std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace agshield
