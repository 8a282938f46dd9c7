#pragma once

#include <cstdint>

namespace tn {

/// Deterministic pseudo-random generator (xoshiro256** seeded through
/// splitmix64). Self-contained so that identical seeds give identical
/// streams on every platform and toolchain; std::mt19937 distributions
/// do not make that guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
};

/// Mixes an arbitrary list of integers into a fresh seed. Used to hand
/// independent, reproducible streams to parallel workers (e.g. one per
/// candidate edge) regardless of scheduling order.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t seed, Parts... parts) {
    std::uint64_t x = seed;
    std::uint64_t h = Rng::splitmix64(x);
    auto mix = [&h](std::uint64_t v) {
        std::uint64_t y = h ^ (v + 0x9e3779b97f4a7c15ULL);
        h = Rng::splitmix64(y);
    };
    (mix(static_cast<std::uint64_t>(parts)), ...);
    return h;
}

}  // namespace tn
