#include "twrelay/channel.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "twrelay/rng.hpp"

namespace twrelay {

namespace {

// |DFT of the tap vector|^2 at every subcarrier. Taps are CN(0, 1/n_taps),
// so the unscaled DFT gives E[|H_k|^2] = 1 for every k.
std::vector<double> one_link_gains(int n, int taps, std::uint64_t subseed) {
    std::mt19937_64 rng(subseed);
    const double comp_sigma = std::sqrt(0.5 / static_cast<double>(taps));
    std::vector<std::complex<double>> h(taps);
    for (int t = 0; t < taps; ++t) {
        double re, im;
        gaussian_pair(rng, re, im);
        h[t] = {re * comp_sigma, im * comp_sigma};
    }
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (int t = 0; t < taps; ++t) {
            const double ang = -2.0 * std::numbers::pi * k * t / n;
            acc += h[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        g[k] = std::norm(acc);
    }
    return g;
}

void write_gain_line(std::FILE* f, const char* label, const std::vector<double>& g) {
    std::fprintf(f, "%s:", label);
    for (double x : g) std::fprintf(f, " %.17g", x);
    std::fprintf(f, "\n");
}

std::vector<double> parse_gain_line(std::istream& in, const std::string& label, int n,
                                    const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": truncated file, missing '" + label + "' line");
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != label + ":") {
        throw std::runtime_error(path + ": expected '" + label + ":' line, got '" + tag + "'");
    }
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        if (!(ls >> g[i])) {
            throw std::runtime_error(path + ": '" + label + "' line has fewer than " +
                                     std::to_string(n) + " values");
        }
        if (!(g[i] >= 0.0)) {
            throw std::runtime_error(path + ": negative or non-finite gain in '" + label + "'");
        }
    }
    double extra;
    if (ls >> extra) {
        throw std::runtime_error(path + ": '" + label + "' line has more than " +
                                 std::to_string(n) + " values");
    }
    return g;
}

}  // namespace

ChannelRealization generate_channel(int n_subcarriers, int n_taps, std::uint64_t seed) {
    if (n_subcarriers <= 0 || n_taps <= 0) {
        throw std::invalid_argument("generate_channel: sizes must be positive");
    }
    if (n_taps > n_subcarriers) {
        throw std::invalid_argument("generate_channel: n_taps must not exceed n_subcarriers");
    }
    std::uint64_t stream = seed;
    ChannelRealization ch;
    ch.n_subcarriers = n_subcarriers;
    ch.n_taps = n_taps;
    ch.seed = seed;
    ch.g1 = one_link_gains(n_subcarriers, n_taps, splitmix64(stream));
    ch.g2 = one_link_gains(n_subcarriers, n_taps, splitmix64(stream));
    ch.gt1 = one_link_gains(n_subcarriers, n_taps, splitmix64(stream));
    ch.gt2 = one_link_gains(n_subcarriers, n_taps, splitmix64(stream));
    return ch;
}

void save_channel(const ChannelRealization& ch, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_channel: cannot open '" + path + "' for writing");
    std::fprintf(f, "N=%d taps=%d seed=%llu\n", ch.n_subcarriers, ch.n_taps,
                 static_cast<unsigned long long>(ch.seed));
    write_gain_line(f, "g1", ch.g1);
    write_gain_line(f, "g2", ch.g2);
    write_gain_line(f, "gt1", ch.gt1);
    write_gain_line(f, "gt2", ch.gt2);
    if (std::fclose(f) != 0) throw std::runtime_error("save_channel: write failure on '" + path + "'");
}

ChannelRealization load_channel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_channel: cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
    int n = 0, taps = 0;
    unsigned long long seed = 0;
    if (std::sscanf(header.c_str(), "N=%d taps=%d seed=%llu", &n, &taps, &seed) != 3) {
        throw std::runtime_error(path + ": malformed header '" + header + "'");
    }
    if (n <= 0 || taps <= 0 || taps > n) {
        throw std::runtime_error(path + ": invalid sizes in header");
    }
    ChannelRealization ch;
    ch.n_subcarriers = n;
    ch.n_taps = taps;
    ch.seed = seed;
    ch.g1 = parse_gain_line(in, "g1", n, path);
    ch.g2 = parse_gain_line(in, "g2", n, path);
    ch.gt1 = parse_gain_line(in, "gt1", n, path);
    ch.gt2 = parse_gain_line(in, "gt2", n, path);
    return ch;
}

}  // namespace twrelay
