#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace twrelay {

/// Per-subcarrier squared channel magnitudes for the four links of the
/// two-way relay: terminal 1 -> relay (g1), terminal 2 -> relay (g2),
/// relay -> terminal 1 (gt1), relay -> terminal 2 (gt2).
///
/// Only squared magnitudes are stored; every rate expression downstream
/// depends on the channel through |h|^2 alone.
struct ChannelRealization {
    int n_subcarriers = 0;
    int n_taps = 0;
    std::vector<double> g1;
    std::vector<double> g2;
    std::vector<double> gt1;
    std::vector<double> gt2;
    std::uint64_t seed = 0;
};

/// Frequency-selective Rayleigh channel: each link's frequency response is
/// the length-N DFT of n_taps i.i.d. circularly-symmetric complex Gaussian
/// time-domain taps. Taps carry variance 1/n_taps each, so every subcarrier
/// gain has unit mean (E[|H_n|^2] = 1) and the power budgets read directly
/// as average SNR against unit-variance noise.
///
/// The four links draw from independent streams: link i is seeded with the
/// i-th word of the splitmix64 sequence started at `seed`. Gaussians come
/// from an explicit Box-Muller map over mt19937_64, so a fixed seed fixes
/// the realization exactly, independent of the standard library build.
///
/// Requires 1 <= n_taps <= n_subcarriers.
ChannelRealization generate_channel(int n_subcarriers, int n_taps, std::uint64_t seed);

/// Writes the fixture format:
///   N=<int> taps=<int> seed=<int>
///   g1: <N numbers>
///   g2: <N numbers>
///   gt1: <N numbers>
///   gt2: <N numbers>
/// Numbers are printed with 17 significant digits so a round-trip is
/// bit-exact. Throws std::runtime_error on I/O failure.
void save_channel(const ChannelRealization& ch, const std::string& path);

/// Parses the fixture format written by save_channel. Throws
/// std::runtime_error with a description on malformed or truncated input.
ChannelRealization load_channel(const std::string& path);

}  // namespace twrelay
