// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_RNG_HPP
#define PILOT_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

namespace pilot {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    /// Circularly symmetric complex Gaussian with unit variance.
    std::complex<double> complex_normal() {
        constexpr double scale = 0.70710678118654752440;
        const double re = normal();
        const double im = normal();
        return {scale * re, scale * im};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace pilot

#endif
