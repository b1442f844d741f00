#pragma once

#include <vector>

#include "twrelay/channel.hpp"
#include "twrelay/rates.hpp"
#include "twrelay/solver_types.hpp"

namespace twrelay {

struct BcSolution {
    std::vector<double> par;
    double r_bc = 0.0;  // min of the two downlink constraint values at par
    DualPoint dual;     // lambda (2, simplex), alpha (1, >= 0)
    long iterations = 0;
    double kkt_residual = 0.0;
    double dual_gap = 0.0;
    bool converged = false;
};

/// Per-subcarrier minimizer of the downlink Lagrangian term
///   alpha*P - (1-mu)*[lambda1*log2(1+a*P) + lambda2*log2(1+b*P)],  P >= 0.
/// The gradient is strictly increasing in P; the solution is 0 when the
/// gradient at 0 is already nonnegative, otherwise the unique positive root
/// of the cleared quadratic.
///
/// Throws std::domain_error("unbounded inner minimizer") when alpha is zero
/// with positive lambda-weighted gain.
double inner_subcarrier_solve_bc(double a_n, double b_n, const DualPoint& dual, double mu);

BcSolution solve_bc(const ChannelRealization& ch, const Budgets& budgets, const SolverConfig& cfg);

}  // namespace twrelay
