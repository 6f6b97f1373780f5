/**
 * @file rng.hpp
 * @brief Seedable, splittable 64-bit random generator (SplitMix64).
 *
 * Streams derived with derive(seed, stream) depend only on (seed, stream),
 * so work partitioned across iterations reproduces bit-identically no matter
 * how the iterations are scheduled.
 */

#pragma once

#include <cmath>
#include <cstdint>

namespace rfit {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, n), n >= 1 (rejection sampling).
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (-n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next();
            if (x >= threshold) return x % n;
        }
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard Gaussian via Box-Muller.
    double next_gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Stateless mix of a base seed and a stream index.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static SplitMix64 derive(std::uint64_t seed, std::uint64_t stream) {
        return SplitMix64(mix(seed, stream));
    }

private:
    std::uint64_t state_;
};

}  // namespace rfit
