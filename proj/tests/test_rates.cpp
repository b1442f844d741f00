#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "test_util.hpp"
#include "twrelay/rates.hpp"

using namespace twrelay;

namespace {

PowerAllocation zeros(int n) {
    PowerAllocation pa;
    pa.p1.assign(n, 0.0);
    pa.p2.assign(n, 0.0);
    pa.pr.assign(n, 0.0);
    return pa;
}

Budgets budgets_of(double p, double mu = 0.5) {
    Budgets b;
    b.p1_max = b.p2_max = b.pr_max = p;
    b.mu = mu;
    return b;
}

PowerAllocation random_pa(std::mt19937_64& rng, int n, double budget) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PowerAllocation pa = zeros(n);
    for (auto* v : {&pa.p1, &pa.p2, &pa.pr}) {
        double s = 0.0;
        for (double& x : *v) {
            x = u(rng);
            s += x;
        }
        for (double& x : *v) x *= budget / std::max(s, 1e-12);
    }
    return pa;
}

}  // namespace

TEST_CASE("all-zero powers give all-zero rates") {
    const auto ch = testutil::make_channel({1.0, 2.0}, {0.5, 1.0}, {1.0, 1.0}, {2.0, 0.5});
    const auto r = type1_rates(ch, zeros(2), budgets_of(1.0));
    CHECK(r.c_ma_1 == 0.0);
    CHECK(r.c_ma_2 == 0.0);
    CHECK(r.c_ma_sum == 0.0);
    CHECK(r.c_bc_1 == 0.0);
    CHECK(r.c_bc_2 == 0.0);
    CHECK(r.r_exchange == 0.0);
    CHECK(type2_rates(ch, zeros(2), budgets_of(1.0)).r_exchange == 0.0);
}

TEST_CASE("single-subcarrier hand evaluation") {
    const auto ch = testutil::make_channel({1.0}, {1.0}, {1.0}, {1.0});
    PowerAllocation pa = zeros(1);
    pa.p1[0] = 1.0;
    pa.p2[0] = 1.0;
    pa.pr[0] = 3.0;
    const auto r = type1_rates(ch, pa, budgets_of(3.0));
    CHECK(r.c_ma_1 == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.c_ma_2 == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.c_ma_sum == doctest::Approx(0.7924812503605781).epsilon(1e-14));
    CHECK(r.c_bc_1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.c_bc_2 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.r_exchange == doctest::Approx(0.3962406251802891).epsilon(1e-14));
}

TEST_CASE("broadcast rates vanish as mu approaches 1") {
    const auto ch = testutil::make_channel({1.0}, {1.0}, {1.0}, {1.0});
    PowerAllocation pa = zeros(1);
    pa.p1[0] = 1.0;
    pa.p2[0] = 1.0;
    // relay silent: the downlink bounds are zero at any mu and cap the rate
    for (double mu : {0.5, 0.9, 0.999}) {
        const auto r = type1_rates(ch, pa, budgets_of(1.0, mu));
        CHECK(r.c_bc_1 == 0.0);
        CHECK(r.c_bc_2 == 0.0);
        CHECK(r.r_exchange == 0.0);
    }
    // relay transmitting: the (1-mu) prefactor drives the bounds to zero
    pa.pr[0] = 3.0;
    double prev = 1e9;
    for (double mu : {0.5, 0.9, 0.99, 0.999}) {
        const auto r = type1_rates(ch, pa, budgets_of(3.0, mu));
        CHECK(r.c_bc_1 < prev);
        CHECK(r.r_exchange <= r.c_bc_1);
        prev = r.c_bc_1;
    }
    CHECK(type1_rates(ch, pa, budgets_of(3.0, 0.999999)).r_exchange < 1e-5);
}

TEST_CASE("types agree at a single subcarrier") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int t = 0; t < 200; ++t) {
        const auto ch = testutil::make_channel({u(rng)}, {u(rng)}, {u(rng)}, {u(rng)});
        PowerAllocation pa = zeros(1);
        pa.p1[0] = u(rng);
        pa.p2[0] = u(rng);
        pa.pr[0] = u(rng);
        const auto r1 = type1_rates(ch, pa, budgets_of(3.0));
        const auto r2 = type2_rates(ch, pa, budgets_of(3.0));
        CHECK(r1.r_exchange == doctest::Approx(r2.r_exchange).epsilon(1e-13));
    }
}

TEST_CASE("hop mismatch strictly penalizes the per-subcarrier region") {
    // subcarrier 0: strong uplinks, weak downlinks; subcarrier 1: reversed
    const auto ch = testutil::make_channel({4.0, 0.25}, {4.0, 0.25}, {0.25, 4.0}, {0.25, 4.0});
    PowerAllocation pa = zeros(2);
    pa.p1 = {1.0, 1.0};
    pa.p2 = {1.0, 1.0};
    pa.pr = {1.0, 1.0};
    const auto r1 = type1_rates(ch, pa, budgets_of(2.0));
    const auto r2 = type2_rates(ch, pa, budgets_of(2.0));
    CHECK(r2.r_exchange < r1.r_exchange - 0.05);
}

TEST_CASE("jointly coded region dominates for any allocation") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 500; ++t) {
        std::uniform_real_distribution<double> u(0.0, 2.0);
        const int n = 1 + static_cast<int>(rng() % 4);
        std::vector<double> g1(n), g2(n), gt1(n), gt2(n);
        for (int i = 0; i < n; ++i) {
            g1[i] = u(rng);
            g2[i] = u(rng);
            gt1[i] = u(rng);
            gt2[i] = u(rng);
        }
        const auto ch = testutil::make_channel(g1, g2, gt1, gt2);
        const auto pa = random_pa(rng, n, 2.0);
        const auto r1 = type1_rates(ch, pa, budgets_of(2.0));
        const auto r2 = type2_rates(ch, pa, budgets_of(2.0));
        CHECK(r1.r_exchange >= r2.r_exchange - 1e-12);
        CHECK(r1.r_exchange <=
              std::min({r1.c_ma_1, r1.c_ma_2, 0.5 * r1.c_ma_sum, r1.c_bc_1, r1.c_bc_2}) + 1e-15);
    }
}

TEST_CASE("constraint values are monotone in each power entry") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        const auto ch = testutil::make_channel({u(rng), u(rng)}, {u(rng), u(rng)},
                                               {u(rng), u(rng)}, {u(rng), u(rng)});
        auto pa = random_pa(rng, 2, 2.0);
        const auto base1 = type1_rates(ch, pa, budgets_of(10.0));
        const auto base2 = type2_rates(ch, pa, budgets_of(10.0));
        auto* vec = (t % 3 == 0) ? &pa.p1 : (t % 3 == 1) ? &pa.p2 : &pa.pr;
        (*vec)[t % 2] += 0.5;
        const auto bump1 = type1_rates(ch, pa, budgets_of(10.0));
        const auto bump2 = type2_rates(ch, pa, budgets_of(10.0));
        CHECK(bump1.c_ma_1 >= base1.c_ma_1);
        CHECK(bump1.c_ma_2 >= base1.c_ma_2);
        CHECK(bump1.c_ma_sum >= base1.c_ma_sum);
        CHECK(bump1.c_bc_1 >= base1.c_bc_1);
        CHECK(bump1.c_bc_2 >= base1.c_bc_2);
        CHECK(bump2.r_exchange >= base2.r_exchange - 1e-15);
    }
}

TEST_CASE("constraint values are concave along segments") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        const auto ch = testutil::make_channel({u(rng), u(rng)}, {u(rng), u(rng)},
                                               {u(rng), u(rng)}, {u(rng), u(rng)});
        const auto pa = random_pa(rng, 2, 2.0);
        const auto pb = random_pa(rng, 2, 2.0);
        const auto ra = type1_rates(ch, pa, budgets_of(2.0));
        const auto rb = type1_rates(ch, pb, budgets_of(2.0));
        for (double w : {0.25, 0.5, 0.75}) {
            PowerAllocation mix = pa;
            for (int i = 0; i < 2; ++i) {
                mix.p1[i] = w * pa.p1[i] + (1 - w) * pb.p1[i];
                mix.p2[i] = w * pa.p2[i] + (1 - w) * pb.p2[i];
                mix.pr[i] = w * pa.pr[i] + (1 - w) * pb.pr[i];
            }
            const auto rm = type1_rates(ch, mix, budgets_of(2.0));
            CHECK(rm.c_ma_1 >= w * ra.c_ma_1 + (1 - w) * rb.c_ma_1 - 1e-9);
            CHECK(rm.c_ma_2 >= w * ra.c_ma_2 + (1 - w) * rb.c_ma_2 - 1e-9);
            CHECK(rm.c_ma_sum >= w * ra.c_ma_sum + (1 - w) * rb.c_ma_sum - 1e-9);
            CHECK(rm.c_bc_1 >= w * ra.c_bc_1 + (1 - w) * rb.c_bc_1 - 1e-9);
            CHECK(rm.c_bc_2 >= w * ra.c_bc_2 + (1 - w) * rb.c_bc_2 - 1e-9);
        }
    }
}

TEST_CASE("bad inputs are rejected") {
    const auto ch = testutil::make_channel({1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0});
    auto pa = zeros(2);
    pa.p1.resize(3, 0.0);
    CHECK_THROWS_AS(type1_rates(ch, pa, budgets_of(1.0)), std::invalid_argument);
    pa = zeros(2);
    pa.p2[1] = -0.5;
    CHECK_THROWS_AS(type1_rates(ch, pa, budgets_of(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(type2_rates(ch, pa, budgets_of(1.0)), std::invalid_argument);
    pa = zeros(2);
    Budgets bad = budgets_of(1.0);
    bad.mu = 1.0;
    CHECK_THROWS_AS(type1_rates(ch, pa, bad), std::invalid_argument);
}

TEST_CASE("feasibility predicate") {
    Budgets b = budgets_of(1.0);
    PowerAllocation pa = zeros(4);
    for (double& x : pa.p1) x = 0.25;
    for (double& x : pa.p2) x = 0.25;
    for (double& x : pa.pr) x = 0.25;
    CHECK(check_feasible(pa, b));  // exactly at budget
    pa.p1[0] = 1.5;
    CHECK(!check_feasible(pa, b));
    pa = zeros(4);
    pa.p2[2] = -1e-12;
    CHECK(check_feasible(pa, b));  // within tolerance
    pa.p2[2] = -1e-3;
    CHECK(!check_feasible(pa, b));
}
