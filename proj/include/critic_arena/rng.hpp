// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace critic_arena {

// splitmix64 finalizer. Full-avalanche mix of a 64-bit value.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic stream derivation: independent draws for (seed, a, b) tuples.
// Identical tuples always yield identical values.
inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                             std::uint64_t b) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ mix64(a + 0x632BE59BD9B4E019ull));
    h = mix64(h ^ mix64(b + 0x9E6C63D0876A9A35ull));
    return h;
}

// Uniform double in [0, 1) from the top 53 bits.
inline constexpr double to_unit_double(std::uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Minimal counter-based generator over derive_stream. Cheap to construct,
// no state beyond the seed and counter.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    constexpr double next_unit() { return to_unit_double(next()); }

    // Unbiased draw in [0, bound) by rejection.
    constexpr std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace critic_arena
