#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace twrelay {

/// Dual variables of one subproblem. lambda weights the rate constraints
/// (3 entries for the multiple-access subproblem, 2 for the broadcast one)
/// and lives on the probability simplex; alpha weights the power budgets
/// (2 entries for MA, 1 for BC) and is only required to be nonnegative.
struct DualPoint {
    std::vector<double> lambda;
    std::vector<double> alpha;
};

/// Progress report handed to SolverConfig::on_iteration once per outer
/// subgradient step. `dual` is the projected dual point of that step,
/// `dual_value` the dual objective there.
struct IterationInfo {
    int iteration = 0;
    double dual_value = 0.0;
    double step = 0.0;
    const DualPoint* dual = nullptr;
};

struct SolverConfig {
    double epsilon = 1e-6;  // relative dual-change stopping tolerance
    int max_iters = 20000;
    double step0 = 0.1;  // scaled internally by 1/max(1, largest budget)
    // Only "sqrt_k" is implemented: s_k = step0_eff / sqrt(k).
    const char* step_rule = "sqrt_k";
    // After the diminishing-step run, a few constant-step stages with
    // geometrically shrinking steps tighten the dual certificate. Set
    // polish_stages = 0 to disable.
    int polish_stages = 40;
    int polish_iters = 250;
    // Optional observer; called with every accepted iterate. Must not throw.
    std::function<void(const IterationInfo&)> on_iteration;
};

}  // namespace twrelay
