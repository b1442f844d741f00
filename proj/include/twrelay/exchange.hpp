#pragma once

#include "twrelay/bc_solver.hpp"
#include "twrelay/channel.hpp"
#include "twrelay/ma_solver.hpp"
#include "twrelay/rates.hpp"
#include "twrelay/solver_types.hpp"

namespace twrelay {

/// A power allocation together with the rates it achieves.
struct EvaluatedAllocation {
    PowerAllocation pa;
    RateSummary rates;
};

struct ExchangeSolution {
    PowerAllocation pa;
    RateSummary rates;  // jointly coded region evaluated at pa
    MaSolution ma;
    BcSolution bc;
    bool converged = false;  // both subproblem flags
};

/// Full two-phase optimization: the uplink and downlink subproblems share no
/// variables, so each is solved on its own and the exchange rate is
/// min(r_ma, r_bc). Throws std::logic_error if re-evaluating the combined
/// allocation disagrees with that min beyond 1e-6.
ExchangeSolution solve_exchange(const ChannelRealization& ch, const Budgets& budgets,
                                const SolverConfig& cfg);

/// Uniform power allocation baseline: every node spreads its budget evenly
/// across subcarriers.
EvaluatedAllocation solve_uniform(const ChannelRealization& ch, const Budgets& budgets);

}  // namespace twrelay
