#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sceneloc {

/// Counter-based generator. Draw n of stream (seed, stream_id) is
///
///   key  = mix(seed ^ mix(stream_id + GAMMA))
///   x_n  = mix(key + (n + 1) * GAMMA)
///
/// where mix is the SplitMix64 finalizer and GAMMA = 0x9E3779B97F4A7C15.
/// Uniforms take the top 53 bits: u = ((x >> 11) + 0.5) * 2^-53, so u is in
/// (0, 1). Normals use Box-Muller on two consecutive uniforms and keep only
/// the cosine branch, which makes every draw a pure function of its index.
class CounterRng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    CounterRng(std::uint64_t seed, std::uint64_t stream_id)
        : key_(mix(seed ^ mix(stream_id + kGamma))) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stream identifiers combine a purpose tag with an index such as a frame number.
constexpr std::uint64_t stream_id(std::uint32_t tag, std::uint64_t index) {
    return (static_cast<std::uint64_t>(tag) << 40) ^ index;
}

}  // namespace sceneloc
