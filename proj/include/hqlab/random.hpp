#pragma once

#include <cstdint>
#include <initializer_list>
#include <cmath>
#include <random>

namespace hqlab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a base seed with stream coordinates so that
/// every (seed, n, block) triple gets an independent generator.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                                  std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t s = mix_seed(seed);
    for (auto c : coords) s = mix_seed(s ^ (c + 0x632be59bd9b4e019ULL));
    return s;
}

/// Uniform double in [lo, hi). Written out so that draws do not depend on a
/// standard library's distribution implementation.
[[nodiscard]] inline double uniform(Rng& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

/// Standard normal via Box-Muller, portable across standard libraries.
[[nodiscard]] inline double standard_normal(Rng& rng) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = uniform(rng, 0.0, 1.0);
    while (u1 <= 0.0) u1 = uniform(rng, 0.0, 1.0);
    const double u2 = uniform(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace hqlab
