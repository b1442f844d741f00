#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace twrelay {

/// splitmix64 step: mixes the state and returns the next output word.
/// Used to derive independent sub-seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// k-th word of the splitmix64 stream seeded with `master`.
inline std::uint64_t derive_subseed(std::uint64_t master, std::uint64_t k) {
    std::uint64_t s = master;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= k; ++i) out = splitmix64(s);
    return out;
}

/// Hash of (master, a, b), for per-(sweep point, realization) channel seeds.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    splitmix64(s);
    s ^= b * 0xbf58476d1ce4e5b9ULL;
    return splitmix64(s);
}

/// Uniform double in (0, 1], from the top 53 bits of a 64-bit draw.
inline double uniform_unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
}

/// One standard-normal pair via Box-Muller. Spelled out rather than using
/// std::normal_distribution so the draw sequence is identical across
/// standard-library implementations.
inline void gaussian_pair(std::mt19937_64& rng, double& z0, double& z1) {
    const double u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(theta);
    z1 = r * std::sin(theta);
}

}  // namespace twrelay
