#pragma once

#include <vector>

#include "twrelay/channel.hpp"

namespace twrelay {

/// Transmit powers in linear SNR units, one entry per subcarrier for each of
/// terminal 1, terminal 2 and the relay. Feasibility against the budgets is
/// checked by check_feasible, never assumed.
struct PowerAllocation {
    std::vector<double> p1;
    std::vector<double> p2;
    std::vector<double> pr;
};

struct Budgets {
    double p1_max = 0.0;
    double p2_max = 0.0;
    double pr_max = 0.0;
    double mu = 0.5;  // fraction of the slot spent in the multiple-access phase
};

/// The five rate-constraint values of the multi-subcarrier region, in bits
/// per OFDM-block use, plus the achieved symmetric exchange rate
///   r_exchange = min(c_ma_1, c_ma_2, c_ma_sum / 2, c_bc_1, c_bc_2).
///
/// For the per-subcarrier region (type2_rates) c_ma_1/c_ma_2 hold the two
/// directional sums-of-mins and c_bc_2/c_bc_1 mirror them, so the same min
/// rule applies unchanged.
struct RateSummary {
    double c_ma_1 = 0.0;    // uplink bound on the 1 -> 2 direction
    double c_ma_2 = 0.0;    // uplink bound on the 2 -> 1 direction
    double c_ma_sum = 0.0;  // multiple-access sum-rate bound (not halved)
    double c_bc_1 = 0.0;    // broadcast bound toward terminal 1
    double c_bc_2 = 0.0;    // broadcast bound toward terminal 2
    double r_exchange = 0.0;
};

/// Multi-subcarrier (jointly coded) region: every constraint is a sum of
/// per-subcarrier logs. Throws on length mismatch or negative power.
RateSummary type1_rates(const ChannelRealization& ch, const PowerAllocation& pa,
                        const Budgets& budgets);

/// Per-subcarrier region: the two directional constraints take the min of
/// the uplink and downlink rate on each subcarrier *before* summing; the
/// sum-rate constraint is the same as in type1_rates.
RateSummary type2_rates(const ChannelRealization& ch, const PowerAllocation& pa,
                        const Budgets& budgets);

/// True iff every power vector sums to at most budget*(1+tol) and no entry
/// is below -tol. Subgradient iterates sit on the budget boundary, hence the
/// relative slack.
bool check_feasible(const PowerAllocation& pa, const Budgets& budgets, double tol = 1e-9);

}  // namespace twrelay
