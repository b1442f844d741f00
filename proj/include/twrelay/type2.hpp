#pragma once

#include "twrelay/channel.hpp"
#include "twrelay/rates.hpp"
#include "twrelay/solver_types.hpp"

namespace twrelay {

struct Type2Solution {
    PowerAllocation pa;
    RateSummary rates;  // per-subcarrier region evaluated at pa
    long iterations = 0;
    bool converged = false;
};

/// Maximizes the per-subcarrier-region exchange rate (the concave max-min of
/// type2_rates) by projected supergradient ascent on the three power vectors,
/// each constrained to {p >= 0, sum p <= budget}. Returns the best feasible
/// iterate seen.
Type2Solution solve_type2(const ChannelRealization& ch, const Budgets& budgets,
                          const SolverConfig& cfg);

}  // namespace twrelay
