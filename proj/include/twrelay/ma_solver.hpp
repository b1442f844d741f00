#pragma once

#include <utility>
#include <vector>

#include "twrelay/channel.hpp"
#include "twrelay/rates.hpp"
#include "twrelay/solver_types.hpp"

namespace twrelay {

struct MaSolution {
    std::vector<double> pa1;
    std::vector<double> pa2;
    double r_ma = 0.0;  // min of the three uplink constraint values at (pa1, pa2)
    DualPoint dual;     // lambda (3, simplex), alpha (2, >= 0)
    long iterations = 0;
    double kkt_residual = 0.0;  // max over subcarriers of min(P, |stationarity|)
    double dual_gap = 0.0;      // dual objective - r_ma, >= -1e-9 by weak duality
    bool converged = false;
};

/// Per-subcarrier minimizer of the uplink Lagrangian term
///   alpha1*P1 + alpha2*P2 - mu*lambda1*log2(1+g1*P1) - mu*lambda2*log2(1+g2*P2)
///   - (mu*lambda3/2)*log2(1+g1*P1+g2*P2)
/// over P1, P2 >= 0. Cases tried in order: both positive (cubic in the total
/// received power), P1 only, P2 only, both zero.
///
/// Throws std::domain_error("unbounded inner minimizer") when an alpha entry
/// is zero while its power still carries positive lambda-weighted gain; the
/// outer loop never produces that state (alpha is kept strictly positive).
std::pair<double, double> inner_subcarrier_solve(double g1n, double g2n, const DualPoint& dual,
                                                 double mu);

MaSolution solve_ma(const ChannelRealization& ch, const Budgets& budgets, const SolverConfig& cfg);

}  // namespace twrelay
