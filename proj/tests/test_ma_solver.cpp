#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"
#include "twrelay/ma_solver.hpp"
#include "twrelay/oracle.hpp"

using namespace twrelay;

namespace {

constexpr double kLn2 = 0.6931471805599453;

DualPoint ma_dual(double l1, double l2, double l3, double a1, double a2) {
    DualPoint d;
    d.lambda = {l1, l2, l3};
    d.alpha = {a1, a2};
    return d;
}

// The per-subcarrier Lagrangian term the inner solver minimizes.
double phi(double g1, double g2, const DualPoint& d, double mu, double p1, double p2) {
    return d.alpha[0] * p1 + d.alpha[1] * p2 - mu * d.lambda[0] * std::log2(1.0 + g1 * p1) -
           mu * d.lambda[1] * std::log2(1.0 + g2 * p2) -
           0.5 * mu * d.lambda[2] * std::log2(1.0 + g1 * p1 + g2 * p2);
}

double stationarity_residual(double g1, double g2, const DualPoint& d, double mu, double p1,
                             double p2) {
    const double y = 1.0 + g1 * p1 + g2 * p2;
    const double s1 = d.alpha[0] - mu * d.lambda[0] * g1 / (kLn2 * (1.0 + g1 * p1)) -
                      mu * d.lambda[2] * g1 / (2.0 * kLn2 * y);
    const double s2 = d.alpha[1] - mu * d.lambda[1] * g2 / (kLn2 * (1.0 + g2 * p2)) -
                      mu * d.lambda[2] * g2 / (2.0 * kLn2 * y);
    // complementary slackness: a positive power needs a vanishing gradient,
    // a zero power needs a nonnegative one
    const double r1 = p1 > 0.0 ? std::abs(s1) : std::max(0.0, -s1);
    const double r2 = p2 > 0.0 ? std::abs(s2) : std::max(0.0, -s2);
    return std::max(r1, r2);
}

SolverConfig quick_config() {
    SolverConfig cfg;
    cfg.max_iters = 2000;
    cfg.polish_stages = 30;
    cfg.polish_iters = 100;
    return cfg;
}

}  // namespace

TEST_CASE("inner solve on a dead subcarrier returns zero") {
    const auto [p1, p2] = inner_subcarrier_solve(0.0, 0.0, ma_dual(0.3, 0.3, 0.4, 1.0, 1.0), 0.5);
    CHECK(p1 == 0.0);
    CHECK(p2 == 0.0);
}

TEST_CASE("inner solve single-user closed form") {
    // 2*ln2*alpha1 = 0.5 makes the water level land at P1 = 1
    const double a1 = 0.25 / kLn2;
    const auto [p1, p2] = inner_subcarrier_solve(1.0, 0.0, ma_dual(1.0, 0.0, 0.0, a1, 5.0), 0.5);
    CHECK(p1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p2 == 0.0);
}

TEST_CASE("inner solve flags the unbounded case") {
    CHECK_THROWS_AS(inner_subcarrier_solve(1.0, 1.0, ma_dual(1.0, 0.0, 0.0, 0.0, 1.0), 0.5),
                    std::domain_error);
    CHECK_THROWS_AS(inner_subcarrier_solve(1.0, 1.0, ma_dual(0.0, 0.0, 1.0, 1.0, 0.0), 0.5),
                    std::domain_error);
    // zero alpha is harmless when the matching gain or multipliers vanish
    const auto [p1, p2] = inner_subcarrier_solve(0.0, 1.0, ma_dual(0.5, 0.5, 0.0, 0.0, 1.0), 0.5);
    CHECK(p1 == 0.0);
    CHECK(p2 >= 0.0);
}

TEST_CASE("inner solve matches the 2-D grid oracle") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> ug(0.05, 3.0);
    std::uniform_real_distribution<double> ua(0.05, 1.5);
    std::uniform_real_distribution<double> ul(0.0, 1.0);
    const double mus[] = {0.5, 0.3, 0.8};
    for (int t = 0; t < 60; ++t) {
        const double g1 = ug(rng), g2 = ug(rng);
        double l1 = ul(rng), l2 = ul(rng), l3 = ul(rng);
        // every sparsity pattern of lambda gets exercised
        switch (t % 6) {
            case 1: l3 = 0.0; break;
            case 2: l1 = 0.0; break;
            case 3: l2 = 0.0; break;
            case 4: l1 = l2 = 0.0; break;
            case 5: l2 = l3 = 0.0; break;
            default: break;
        }
        const double ls = l1 + l2 + l3;
        if (ls == 0.0) {
            l1 = 1.0;
            l2 = l3 = 0.0;
        } else {
            l1 /= ls;
            l2 /= ls;
            l3 /= ls;
        }
        const DualPoint d = ma_dual(l1, l2, l3, ua(rng), ua(rng));
        const double mu = mus[t % 3];
        const auto [p1, p2] = inner_subcarrier_solve(g1, g2, d, mu);

        const double cap =
            2.0 * std::max(mu * (2.0 * l1 + l3) / (2.0 * kLn2 * d.alpha[0]),
                           mu * (2.0 * l2 + l3) / (2.0 * kLn2 * d.alpha[1])) +
            1.0;
        const auto [q1, q2] = testutil::grid_min_2d(
            [&](double x, double y) { return phi(g1, g2, d, mu, x, y); }, cap, 400);
        const double mine = phi(g1, g2, d, mu, p1, p2);
        const double ref = phi(g1, g2, d, mu, q1, q2);
        CHECK(mine <= ref + 1e-7);
        CHECK(mine >= ref - 1e-5);  // oracle must not be beaten by much either
        CHECK(p1 >= 0.0);
        CHECK(p2 >= 0.0);
    }
}

TEST_CASE("accepted inner point satisfies the optimality conditions") {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> ug(0.0, 3.0);
    std::uniform_real_distribution<double> ua(0.02, 2.0);
    std::uniform_real_distribution<double> ul(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        const double g1 = (t % 7 == 0) ? 0.0 : ug(rng);
        const double g2 = (t % 11 == 0) ? 0.0 : ug(rng);
        double l1 = ul(rng), l2 = ul(rng), l3 = ul(rng);
        if (t % 4 == 0) l3 = 0.0;
        if (t % 5 == 0) l1 = 0.0;
        const double ls = std::max(l1 + l2 + l3, 1e-9);
        const DualPoint d = ma_dual(l1 / ls, l2 / ls, l3 / ls, ua(rng), ua(rng));
        const auto [p1, p2] = inner_subcarrier_solve(g1, g2, d, 0.5);
        CHECK(stationarity_residual(g1, g2, d, 0.5, p1, p2) <= 1e-8);
    }
}

TEST_CASE("single-subcarrier uplink optimum is the sum-rate corner") {
    const auto ch = testutil::make_channel({1.0}, {1.0}, {1.0}, {1.0});
    Budgets b;
    b.p1_max = b.p2_max = b.pr_max = 1.0;
    b.mu = 0.5;
    const MaSolution sol = solve_ma(ch, b, quick_config());
    CHECK(sol.r_ma == doctest::Approx(0.25 * std::log2(3.0)).epsilon(2e-4));
    CHECK(sol.pa1[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(sol.pa2[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(sol.dual_gap >= -1e-9);
    CHECK(sol.dual_gap <= 1e-3);
}

TEST_CASE("symmetric channels get symmetric allocations") {
    const auto ch = testutil::make_channel({1.5, 0.4, 0.9}, {1.5, 0.4, 0.9},
                                           {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0});
    Budgets b;
    b.p1_max = b.p2_max = 2.0;
    b.pr_max = 2.0;
    b.mu = 0.5;
    const MaSolution sol = solve_ma(ch, b, quick_config());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(sol.pa1[i] - sol.pa2[i]) <= 1e-6);
}

TEST_CASE("small problems match the exhaustive oracle") {
    std::mt19937_64 rng(103);
    std::exponential_distribution<double> e(1.0);
    for (int t = 0; t < 6; ++t) {
        const int n = (t < 4) ? 2 : 3;
        std::vector<double> g1(n), g2(n), ones(n, 1.0);
        for (int i = 0; i < n; ++i) {
            g1[i] = e(rng);
            g2[i] = e(rng);
        }
        const auto ch = testutil::make_channel(g1, g2, ones, ones);
        Budgets b;
        b.p1_max = b.p2_max = b.pr_max = 2.0;
        b.mu = 0.5;
        const MaSolution sol = solve_ma(ch, b, quick_config());
        const OracleResult ref = grid_maxmin(ch, b, GridObjective::ma_only, 100);
        CHECK(std::abs(sol.r_ma - ref.rate) <= 1e-3);
    }
}

TEST_CASE("dual iterates stay feasible and certify the primal") {
    const auto ch = generate_channel(8, 4, 909);
    Budgets b;
    b.p1_max = 6.0;
    b.p2_max = 10.0;
    b.pr_max = 8.0;
    b.mu = 0.5;
    SolverConfig cfg = quick_config();
    double min_dual = 1e300;
    long seen = 0;
    cfg.on_iteration = [&](const IterationInfo& info) {
        ++seen;
        double ls = 0.0;
        for (double l : info.dual->lambda) {
            CHECK(l >= 0.0);
            ls += l;
        }
        CHECK(std::abs(ls - 1.0) <= 1e-12);
        for (double a : info.dual->alpha) CHECK(a >= 0.0);
        min_dual = std::min(min_dual, info.dual_value);
    };
    const MaSolution sol = solve_ma(ch, b, cfg);
    CHECK(seen == sol.iterations);
    // weak duality: every dual value sits above every recovered primal value
    CHECK(min_dual >= sol.r_ma - 1e-9);
    CHECK(sol.dual_gap >= -1e-9);

    double s1 = 0.0, s2 = 0.0;
    for (double x : sol.pa1) {
        CHECK(x >= 0.0);
        s1 += x;
    }
    for (double x : sol.pa2) {
        CHECK(x >= 0.0);
        s2 += x;
    }
    CHECK(s1 <= b.p1_max * (1.0 + 1e-9));
    CHECK(s2 <= b.p2_max * (1.0 + 1e-9));
    CHECK(sol.kkt_residual <= 1e-5);
}

TEST_CASE("doubling the budgets never hurts") {
    std::mt19937_64 rng(104);
    for (int t = 0; t < 3; ++t) {
        const auto ch = generate_channel(6, 3, 4000 + t);
        Budgets b;
        b.p1_max = b.p2_max = b.pr_max = 3.0;
        b.mu = 0.5;
        const MaSolution lo = solve_ma(ch, b, quick_config());
        b.p1_max = b.p2_max = 6.0;
        const MaSolution hi = solve_ma(ch, b, quick_config());
        CHECK(hi.r_ma >= lo.r_ma - 2e-4);
    }
}

TEST_CASE("all-zero channel solves to zero rate") {
    const auto ch = testutil::make_channel({0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0});
    Budgets b;
    b.p1_max = b.p2_max = b.pr_max = 1.0;
    b.mu = 0.5;
    const MaSolution sol = solve_ma(ch, b, quick_config());
    CHECK(sol.r_ma == 0.0);
    CHECK(sol.kkt_residual <= 1e-12);
}
