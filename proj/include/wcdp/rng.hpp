#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wcdp {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and an index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/**
 * Counter-based uniform stream on [0,1): the draw for key (seed, stream, counter)
 * does not depend on how many other draws were made or in which order, so
 * scenario content is independent of thread scheduling.
 */
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t counter) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
    h = mix64(h ^ (stream * 0x9E3779B97F4A7C15ULL));
    h = mix64(h ^ (counter * 0xC2B2AE3D27D4EB4FULL + 0x165667B19E3779F9ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal draw via Box-Muller on two counter-based uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) noexcept {
    const double u1 = counter_uniform(seed, 2 * stream, counter);
    const double u2 = counter_uniform(seed, 2 * stream + 1, counter);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

/// Small sequential generator for instance generation (deterministic across platforms).
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) noexcept { // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::uint64_t state_;
};

} // namespace wcdp
