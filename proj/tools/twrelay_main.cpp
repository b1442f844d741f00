#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twrelay/channel.hpp"
#include "twrelay/exchange.hpp"
#include "twrelay/oracle.hpp"
#include "twrelay/rng.hpp"
#include "twrelay/type2.hpp"

namespace {

using namespace twrelay;

struct SolverFlags {
    double epsilon = 1e-6;
    int max_iters = 20000;
    double step0 = 0.1;
    int polish_stages = 40;
    int polish_iters = 250;

    SolverConfig config() const {
        SolverConfig cfg;
        cfg.epsilon = epsilon;
        cfg.max_iters = max_iters;
        cfg.step0 = step0;
        cfg.polish_stages = polish_stages;
        cfg.polish_iters = polish_iters;
        return cfg;
    }
};

void add_solver_flags(CLI::App* cmd, SolverFlags* f) {
    cmd->add_option("--epsilon", f->epsilon, "relative dual-change stopping tolerance");
    cmd->add_option("--max-iters", f->max_iters, "diminishing-step iteration budget");
    cmd->add_option("--step0", f->step0, "initial step size");
    cmd->add_option("--polish-stages", f->polish_stages, "constant-step polish stages");
    cmd->add_option("--polish-iters", f->polish_iters, "iterations per polish stage");
}

void write_pa_file(const std::string& path, const PowerAllocation& pa) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "N=%zu\n", pa.p1.size());
    const auto line = [&](const char* name, const std::vector<double>& v) {
        std::fprintf(f, "%s:", name);
        for (double x : v) std::fprintf(f, " %.17g", x);
        std::fprintf(f, "\n");
    };
    line("p1", pa.p1);
    line("p2", pa.p2);
    line("pr", pa.pr);
    std::fclose(f);
}

void print_rates(const RateSummary& r) {
    std::printf("c_ma_1 %.12g\n", r.c_ma_1);
    std::printf("c_ma_2 %.12g\n", r.c_ma_2);
    std::printf("c_ma_sum %.12g\n", r.c_ma_sum);
    std::printf("c_bc_1 %.12g\n", r.c_bc_1);
    std::printf("c_bc_2 %.12g\n", r.c_bc_2);
    std::printf("r_exchange %.12g\n", r.r_exchange);
}

int run_solve(const std::string& channel_file, const Budgets& budgets, const std::string& scheme,
              const SolverFlags& flags, const std::string& pa_out) {
    const ChannelRealization ch = load_channel(channel_file);
    PowerAllocation pa;
    RateSummary rates;
    std::printf("scheme %s\n", scheme.c_str());
    if (scheme == "type1-opt") {
        const ExchangeSolution sol = solve_exchange(ch, budgets, flags.config());
        pa = sol.pa;
        rates = sol.rates;
        print_rates(rates);
        std::printf("iterations_ma %ld\n", sol.ma.iterations);
        std::printf("iterations_bc %ld\n", sol.bc.iterations);
        std::printf("kkt_residual_ma %.12g\n", sol.ma.kkt_residual);
        std::printf("kkt_residual_bc %.12g\n", sol.bc.kkt_residual);
        std::printf("dual_gap_ma %.12g\n", sol.ma.dual_gap);
        std::printf("dual_gap_bc %.12g\n", sol.bc.dual_gap);
        std::printf("converged %d\n", sol.converged ? 1 : 0);
    } else if (scheme == "type1-uniform") {
        const EvaluatedAllocation sol = solve_uniform(ch, budgets);
        pa = sol.pa;
        rates = sol.rates;
        print_rates(rates);
    } else if (scheme == "type2-opt") {
        const Type2Solution sol = solve_type2(ch, budgets, flags.config());
        pa = sol.pa;
        rates = sol.rates;
        print_rates(rates);
        std::printf("iterations %ld\n", sol.iterations);
        std::printf("converged %d\n", sol.converged ? 1 : 0);
    } else {
        std::fprintf(stderr, "unknown scheme: %s\n", scheme.c_str());
        return 1;
    }
    if (!pa_out.empty()) write_pa_file(pa_out, pa);
    return 0;
}

struct SweepRow {
    double mean = 0.0;
    double se = 0.0;
    long n = 0;
    long failures = 0;
    bool absent = false;  // scheme acknowledged but not implemented (af)
};

int run_sweep(std::vector<double> snr_db, int n_real, std::uint64_t seed,
              std::vector<std::string> schemes, const std::string& out, int n_sc, int taps,
              double mu, const SolverFlags& flags) {
    std::sort(snr_db.begin(), snr_db.end());
    snr_db.erase(std::unique(snr_db.begin(), snr_db.end()), snr_db.end());
    std::sort(schemes.begin(), schemes.end());
    schemes.erase(std::unique(schemes.begin(), schemes.end()), schemes.end());
    for (const auto& s : schemes) {
        if (s != "type1-opt" && s != "type1-uniform" && s != "type2-opt" && s != "af") {
            std::fprintf(stderr, "unknown scheme: %s\n", s.c_str());
            return 1;
        }
    }

    // rows[(snr index, scheme)] accumulate sum and sum of squares first
    std::map<std::pair<std::size_t, std::string>, SweepRow> rows;
    std::map<std::pair<std::size_t, std::string>, std::pair<double, double>> acc;

    for (std::size_t si = 0; si < snr_db.size(); ++si) {
        const double p_total = n_sc * std::pow(10.0, snr_db[si] / 10.0);
        Budgets budgets;
        budgets.p1_max = budgets.p2_max = budgets.pr_max = p_total;
        budgets.mu = mu;
        for (int ri = 0; ri < n_real; ++ri) {
            const ChannelRealization ch = generate_channel(
                n_sc, taps, mix_seed(seed, static_cast<std::uint64_t>(si), ri));
            for (const auto& scheme : schemes) {
                auto& row = rows[{si, scheme}];
                if (scheme == "af") {
                    row.absent = true;
                    continue;
                }
                double r = 0.0;
                bool ok = true;
                if (scheme == "type1-opt") {
                    const ExchangeSolution sol = solve_exchange(ch, budgets, flags.config());
                    r = sol.rates.r_exchange;
                    ok = sol.converged;
                } else if (scheme == "type1-uniform") {
                    r = solve_uniform(ch, budgets).rates.r_exchange;
                } else {
                    const Type2Solution sol = solve_type2(ch, budgets, flags.config());
                    r = sol.rates.r_exchange;
                    ok = sol.converged;
                }
                // per-subcarrier sum rate of the exchange, 2 R_X / N
                const double x = 2.0 * r / n_sc;
                auto& a = acc[{si, scheme}];
                a.first += x;
                a.second += x * x;
                row.n += 1;
                if (!ok) row.failures += 1;
            }
        }
    }

    for (auto& [key, row] : rows) {
        if (row.absent || row.n == 0) continue;
        const auto& a = acc[key];
        row.mean = a.first / static_cast<double>(row.n);
        if (row.n > 1) {
            const double var =
                std::max(0.0, (a.second - a.first * a.first / static_cast<double>(row.n)) /
                                  static_cast<double>(row.n - 1));
            row.se = std::sqrt(var / static_cast<double>(row.n));
        }
    }

    std::FILE* f = std::fopen(out.c_str(), "w");
    if (!f) {
        std::fprintf(stderr, "cannot write %s\n", out.c_str());
        return 1;
    }
    std::fprintf(f, "snr_db,scheme,mean_rate_bps_hz,stderr,n,failures\n");
    // map iteration order is already (snr index, scheme name) ascending
    for (const auto& [key, row] : rows) {
        const double snr = snr_db[key.first];
        if (row.absent) {
            std::fprintf(f, "%.10g,%s,,,0,0\n", snr, key.second.c_str());
        } else {
            std::fprintf(f, "%.10g,%s,%.12g,%.12g,%ld,%ld\n", snr, key.second.c_str(), row.mean,
                         row.se, row.n, row.failures);
        }
    }
    std::fclose(f);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-way relay power allocation experiments"};
    app.set_config("--config");
    app.require_subcommand(1);

    // gen-channels
    auto* gen = app.add_subcommand("gen-channels", "generate and save a channel realization");
    int gen_n = 32, gen_taps = 8;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--subcarriers", gen_n, "number of subcarriers")->check(CLI::PositiveNumber);
    gen->add_option("--taps", gen_taps, "impulse response taps per link")
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--out", gen_out, "output fixture path")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "solve one saved realization");
    std::string solve_channel, solve_scheme = "type1-opt", solve_pa_out;
    Budgets solve_budgets;
    SolverFlags solve_flags;
    solve->add_option("--channel", solve_channel, "channel fixture path")->required();
    solve->add_option("--p1max", solve_budgets.p1_max, "terminal 1 power budget")->required();
    solve->add_option("--p2max", solve_budgets.p2_max, "terminal 2 power budget")->required();
    solve->add_option("--prmax", solve_budgets.pr_max, "relay power budget")->required();
    solve->add_option("--mu", solve_budgets.mu, "multiple-access phase time fraction");
    solve->add_option("--scheme", solve_scheme, "type1-opt, type1-uniform or type2-opt");
    solve->add_option("--pa-out", solve_pa_out, "write the power allocation to this file");
    add_solver_flags(solve, &solve_flags);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo average rate vs SNR");
    std::vector<double> sweep_snr;
    int sweep_n = 500, sweep_sc = 32, sweep_taps = 8;
    std::uint64_t sweep_seed = 1;
    double sweep_mu = 0.5;
    std::vector<std::string> sweep_schemes{"type1-opt", "type1-uniform", "type2-opt"};
    std::string sweep_out;
    SolverFlags sweep_flags;
    sweep->add_option("--snr-db", sweep_snr, "per-subcarrier average SNR points in dB")
        ->required()
        ->expected(-1);
    sweep->add_option("--n", sweep_n, "realizations per SNR point")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sweep_seed, "master seed");
    sweep->add_option("--schemes", sweep_schemes, "schemes to run")->expected(-1);
    sweep->add_option("--subcarriers", sweep_sc, "number of subcarriers")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--taps", sweep_taps, "impulse response taps per link")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--mu", sweep_mu, "multiple-access phase time fraction");
    sweep->add_option("--out", sweep_out, "output CSV path")->required();
    add_solver_flags(sweep, &sweep_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const ChannelRealization ch = generate_channel(gen_n, gen_taps, gen_seed);
            save_channel(ch, gen_out);
            std::printf("wrote %s\n", gen_out.c_str());
            return 0;
        }
        if (solve->parsed()) {
            return run_solve(solve_channel, solve_budgets, solve_scheme, solve_flags,
                             solve_pa_out);
        }
        return run_sweep(sweep_snr, sweep_n, sweep_seed, sweep_schemes, sweep_out, sweep_sc,
                         sweep_taps, sweep_mu, sweep_flags);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
