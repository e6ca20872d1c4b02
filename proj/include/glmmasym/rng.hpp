#ifndef GLMMASYM_RNG_HPP
#define GLMMASYM_RNG_HPP

#include <cstdint>

#include "glmmasym/stats.hpp"

// Splittable counter-based random streams. Each stream is keyed by up to
// three 64-bit words (master seed plus substream labels); keyed streams
// are statistically independent, so replicates can run in parallel with
// no shared state and results do not depend on scheduling.

namespace glmmasym {

namespace detail {

// SplitMix64 output function (Steele, Lea & Flood's mixer).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : state_(detail::mix64(seed)) {}

    SplitRng(std::uint64_t seed, std::uint64_t key1)
        : state_(detail::mix64(detail::mix64(seed) ^ (key1 * 0x9E3779B97F4A7C15ULL))) {}

    SplitRng(std::uint64_t seed, std::uint64_t key1, std::uint64_t key2)
        : SplitRng(detail::mix64(seed) ^ (key1 * 0xD1B54A32D192ED03ULL), key2) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1), 53-bit resolution, endpoints excluded.
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via the inverse CDF; one draw consumes one u64, which
    // keeps streams aligned regardless of how the values are used.
    double normal() { return normal_quantile(uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t state_;
};

}  // namespace glmmasym

#endif
