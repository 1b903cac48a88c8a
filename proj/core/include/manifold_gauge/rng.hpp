#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mgauge {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so rows can be generated in any order or in
/// parallel and still reproduce bit-for-bit.
///
/// The mixing function is the SplitMix64 finalizer:
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31)
/// with the Weyl increment 0x9E3779B97F4A7C15. A stream key is
/// mix(seed ^ mix(stream * W + W)); draw c of that stream is mix(key + c * W).
/// Uniforms take the top 53 bits; normals use Box-Muller on draws (2c, 2c+1).
class CounterRng {
public:
    static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ull;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix(seed ^ mix(stream * kWeyl + kWeyl))) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix(key_ + counter * kWeyl);
    }

    // Uniform in [0, 1).
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    double normal(std::uint64_t counter) const noexcept {
        const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
};

// Stream identifiers keep independent quantities from sharing draws.
constexpr std::uint64_t stream_id(std::uint64_t tag, std::uint64_t index) noexcept {
    return CounterRng::mix(tag * CounterRng::kWeyl) ^ index;
}

}  // namespace mgauge
