#include "twrelay/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twrelay {

ExchangeSolution solve_exchange(const ChannelRealization& ch, const Budgets& budgets,
                                const SolverConfig& cfg) {
    ExchangeSolution sol;
    sol.ma = solve_ma(ch, budgets, cfg);
    sol.bc = solve_bc(ch, budgets, cfg);
    sol.pa.p1 = sol.ma.pa1;
    sol.pa.p2 = sol.ma.pa2;
    sol.pa.pr = sol.bc.par;
    sol.rates = type1_rates(ch, sol.pa, budgets);
    sol.converged = sol.ma.converged && sol.bc.converged;
    const double combined = std::min(sol.ma.r_ma, sol.bc.r_bc);
    if (std::abs(sol.rates.r_exchange - combined) > 1e-6 * std::max(1.0, combined)) {
        throw std::logic_error("subproblem rates disagree with the combined allocation");
    }
    return sol;
}

EvaluatedAllocation solve_uniform(const ChannelRealization& ch, const Budgets& budgets) {
    const auto n = static_cast<std::size_t>(ch.n_subcarriers);
    EvaluatedAllocation out;
    out.pa.p1.assign(n, budgets.p1_max / static_cast<double>(n));
    out.pa.p2.assign(n, budgets.p2_max / static_cast<double>(n));
    out.pa.pr.assign(n, budgets.pr_max / static_cast<double>(n));
    out.rates = type1_rates(ch, out.pa, budgets);
    return out;
}

}  // namespace twrelay
