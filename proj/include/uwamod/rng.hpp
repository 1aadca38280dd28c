// rng.hpp - labeled, reproducible random streams
//
// Every stochastic component of the toolkit draws from a RandomStream keyed
// by (seed, label, index). Streams with different labels or indices are
// decorrelated, so adding draws to one consumer never perturbs another.
// Conversions from raw engine words to doubles are done by hand; the
// std::uniform_real_distribution / std::normal_distribution adapters are
// implementation-defined and would break cross-platform reproducibility.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace uwamod {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Mixes (seed, label, index) into a single engine seed.
inline std::uint64_t stream_key(std::uint64_t seed, std::string_view label, std::uint64_t index) {
    std::uint64_t k = splitmix64(seed ^ fnv1a64(label));
    return splitmix64(k ^ splitmix64(index ^ 0xA5A5A5A55A5A5A5AULL));
}

}  // namespace detail

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0)
        : engine_(detail::stream_key(seed, label, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the second deviate of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly symmetric complex Gaussian with E[|z|^2] = variance.
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        return {s * normal(), s * normal()};
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline RandomStream spawn_stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
    return RandomStream(seed, label, index);
}

}  // namespace uwamod
