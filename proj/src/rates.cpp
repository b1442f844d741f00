#include "twrelay/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace twrelay {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double log2_1p(double x) { return std::log1p(x) / kLn2; }

void require_vector(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) {
        throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(n) +
                                    " entries, got " + std::to_string(v.size()));
    }
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument(std::string(name) + ": powers must be finite and >= 0");
        }
    }
}

void validate(const ChannelRealization& ch, const PowerAllocation& pa, const Budgets& budgets) {
    const auto n = static_cast<std::size_t>(ch.n_subcarriers);
    require_vector(pa.p1, n, "p1");
    require_vector(pa.p2, n, "p2");
    require_vector(pa.pr, n, "pr");
    if (!(budgets.mu > 0.0 && budgets.mu < 1.0)) {
        throw std::invalid_argument("mu must lie in (0, 1)");
    }
}

double min_rate(const RateSummary& r) {
    return std::min({r.c_ma_1, r.c_ma_2, 0.5 * r.c_ma_sum, r.c_bc_1, r.c_bc_2});
}

}  // namespace

RateSummary type1_rates(const ChannelRealization& ch, const PowerAllocation& pa,
                        const Budgets& budgets) {
    validate(ch, pa, budgets);
    const double mu = budgets.mu;
    RateSummary r;
    for (int n = 0; n < ch.n_subcarriers; ++n) {
        r.c_ma_1 += mu * log2_1p(ch.g1[n] * pa.p1[n]);
        r.c_ma_2 += mu * log2_1p(ch.g2[n] * pa.p2[n]);
        r.c_ma_sum += mu * log2_1p(ch.g1[n] * pa.p1[n] + ch.g2[n] * pa.p2[n]);
        r.c_bc_1 += (1.0 - mu) * log2_1p(ch.gt1[n] * pa.pr[n]);
        r.c_bc_2 += (1.0 - mu) * log2_1p(ch.gt2[n] * pa.pr[n]);
    }
    r.r_exchange = min_rate(r);
    return r;
}

RateSummary type2_rates(const ChannelRealization& ch, const PowerAllocation& pa,
                        const Budgets& budgets) {
    validate(ch, pa, budgets);
    const double mu = budgets.mu;
    RateSummary r;
    // Direction 1->2 is limited per subcarrier by the uplink from terminal 1
    // and the downlink toward terminal 2, and vice versa.
    for (int n = 0; n < ch.n_subcarriers; ++n) {
        const double up1 = mu * log2_1p(ch.g1[n] * pa.p1[n]);
        const double up2 = mu * log2_1p(ch.g2[n] * pa.p2[n]);
        const double down1 = (1.0 - mu) * log2_1p(ch.gt1[n] * pa.pr[n]);
        const double down2 = (1.0 - mu) * log2_1p(ch.gt2[n] * pa.pr[n]);
        r.c_ma_1 += std::min(up1, down2);
        r.c_ma_2 += std::min(up2, down1);
        r.c_ma_sum += mu * log2_1p(ch.g1[n] * pa.p1[n] + ch.g2[n] * pa.p2[n]);
    }
    r.c_bc_1 = r.c_ma_2;
    r.c_bc_2 = r.c_ma_1;
    r.r_exchange = min_rate(r);
    return r;
}

bool check_feasible(const PowerAllocation& pa, const Budgets& budgets, double tol) {
    const auto ok = [tol](const std::vector<double>& v, double cap) {
        double sum = 0.0;
        for (double x : v) {
            if (x < -tol) return false;
            sum += x;
        }
        return sum <= cap * (1.0 + tol) + tol;
    };
    return ok(pa.p1, budgets.p1_max) && ok(pa.p2, budgets.p2_max) && ok(pa.pr, budgets.pr_max);
}

}  // namespace twrelay
