#include "twrelay/bc_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "subgradient_loop.hpp"
#include "twrelay/numerics.hpp"

namespace twrelay {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double bc_gradient(double a, double b, double l1, double l2, double alpha, double k, double p) {
    return alpha - (k / kLn2) * (l1 * a / (1.0 + a * p) + l2 * b / (1.0 + b * p));
}

double bc_inner(double a, double b, const DualPoint& d, double mu) {
    const double l1 = d.lambda[0], l2 = d.lambda[1];
    const double alpha = d.alpha[0];
    const double k = 1.0 - mu;
    if (bc_gradient(a, b, l1, l2, alpha, k, 0.0) >= 0.0) return 0.0;
    // gradient at 0 negative implies some weighted gain is positive
    if (a > 0.0 && b > 0.0) {
        // Clearing denominators of the stationarity equation (lambda1 +
        // lambda2 = 1 collapses the cross terms):
        //   (ln2*alpha)ab P^2 + [(ln2*alpha)(a+b) - k*ab] P
        //     + [ln2*alpha - k(l1*a + l2*b)] = 0
        // The constant term is ln2 times the gradient at 0, negative here, so
        // exactly one root is positive.
        const double q2 = kLn2 * alpha * a * b;
        const double q1 = kLn2 * alpha * (a + b) - k * a * b;
        const double q0 = kLn2 * alpha - k * (l1 * a + l2 * b);
        const auto root = positive_root_quadratic(q2, q1, q0);
        return root ? *root : 0.0;
    }
    // Single active link: plain water-filling weighted by its multiplier.
    if (a > 0.0) return k * l1 / (kLn2 * alpha) - 1.0 / a;
    return k * l2 / (kLn2 * alpha) - 1.0 / b;
}

struct BcProblem {
    static constexpr int n_lambda = 2;
    static constexpr int n_alpha = 1;
    const ChannelRealization* ch;
    Budgets budgets;

    int n() const { return ch->n_subcarriers; }
    double budget(int) const { return budgets.pr_max; }

    void inner_all(const DualPoint& d, std::array<std::vector<double>, 1>& p) const {
        for (int i = 0; i < ch->n_subcarriers; ++i) {
            p[0][i] = bc_inner(ch->gt1[i], ch->gt2[i], d, budgets.mu);
        }
    }

    void constraint_values(const std::array<std::vector<double>, 1>& p, double* c) const {
        double c1 = 0.0, c2 = 0.0;
        for (int i = 0; i < ch->n_subcarriers; ++i) {
            c1 += std::log1p(ch->gt1[i] * p[0][i]);
            c2 += std::log1p(ch->gt2[i] * p[0][i]);
        }
        const double k = (1.0 - budgets.mu) / kLn2;
        c[0] = k * c1;
        c[1] = k * c2;
    }

    // Supergradient of min(c[0], c[1]); c[0] wins ties.
    void active_gradient(const std::array<std::vector<double>, 1>& p, const double* c,
                         std::array<std::vector<double>, 1>& grad) const {
        const double k = (1.0 - budgets.mu) / kLn2;
        const std::vector<double>& g = c[0] <= c[1] ? ch->gt1 : ch->gt2;
        for (int i = 0; i < ch->n_subcarriers; ++i) {
            grad[0][i] = k * g[i] / (1.0 + g[i] * p[0][i]);
        }
    }

    // Stationarity coefficients over (lambda1, lambda2, alpha) for every
    // power entry that can move.
    void stationarity_rows(const std::array<std::vector<double>, 1>& p,
                           std::vector<std::array<double, 3>>& rows) const {
        const double k = (1.0 - budgets.mu) / kLn2;
        for (int i = 0; i < ch->n_subcarriers; ++i) {
            const double pi = p[0][i];
            if (pi <= 1e-6) continue;
            rows.push_back({-k * ch->gt1[i] / (1.0 + ch->gt1[i] * pi),
                            -k * ch->gt2[i] / (1.0 + ch->gt2[i] * pi), 1.0});
        }
    }

    void hessian_terms(const std::array<std::vector<double>, 1>& p, const DualPoint& d,
                       detail::HessianAccumulator<3>& acc) const {
        const double k = (1.0 - budgets.mu) / kLn2;
        for (int i = 0; i < ch->n_subcarriers; ++i) {
            const double pi = p[0][i];
            if (pi <= 0.0) continue;
            const double da = ch->gt1[i] / (1.0 + ch->gt1[i] * pi);
            const double db = ch->gt2[i] / (1.0 + ch->gt2[i] * pi);
            const double row[3] = {-k * da, -k * db, 1.0};
            const double spp = k * (d.lambda[0] * da * da + d.lambda[1] * db * db);
            acc.add(1, row, &spp);
        }
    }

    double kkt_residual(const std::array<std::vector<double>, 1>& p, const DualPoint& d) const {
        const double k = 1.0 - budgets.mu;
        double worst = 0.0;
        for (int i = 0; i < ch->n_subcarriers; ++i) {
            const double g = bc_gradient(ch->gt1[i], ch->gt2[i], d.lambda[0], d.lambda[1],
                                         d.alpha[0], k, p[0][i]);
            worst = std::max(worst, std::min(p[0][i], std::abs(g)));
        }
        return worst;
    }
};

}  // namespace

double inner_subcarrier_solve_bc(double a_n, double b_n, const DualPoint& dual, double mu) {
    if (dual.lambda.size() != 2 || dual.alpha.size() != 1) {
        throw std::invalid_argument("downlink dual point needs 2 lambda and 1 alpha entries");
    }
    if (dual.alpha[0] == 0.0 &&
        ((a_n > 0.0 && dual.lambda[0] > 0.0) || (b_n > 0.0 && dual.lambda[1] > 0.0))) {
        throw std::domain_error("unbounded inner minimizer");
    }
    return bc_inner(a_n, b_n, dual, mu);
}

BcSolution solve_bc(const ChannelRealization& ch, const Budgets& budgets, const SolverConfig& cfg) {
    BcProblem prob{&ch, budgets};
    auto out = detail::run_subgradient(prob, cfg);
    BcSolution sol;
    sol.par = std::move(out.powers[0]);
    sol.r_bc = out.primal_value;
    sol.dual = std::move(out.dual);
    sol.iterations = out.iterations;
    sol.kkt_residual = out.kkt_residual;
    sol.dual_gap = out.dual_value - sol.r_bc;
    sol.converged = out.converged;
    return sol;
}

}  // namespace twrelay
