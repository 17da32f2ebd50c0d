#pragma once

#include <cstdint>
#include <random>

namespace dialogue_rl {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic random source. mt19937_64 output is pinned by the standard
/// and the float helpers avoid std::uniform_* distributions, whose sequences
/// differ across library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(uniform01() * static_cast<double>(n));
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Independent child stream: mixes a master seed with a stream id so that
/// per-item generators are reproducible regardless of scheduling order.
inline Rng derive_rng(std::uint64_t master, std::uint64_t stream) {
    return Rng(splitmix64(master ^ splitmix64(stream + 0x51ED2700DULL)));
}

} // namespace dialogue_rl
