#include "twrelay/type2.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "twrelay/numerics.hpp"

namespace twrelay {

namespace {

constexpr double kLn2 = 0.6931471805599453;

struct Ascent {
    const ChannelRealization* ch;
    Budgets budgets;

    double objective(const PowerAllocation& pa) const {
        const double mu = budgets.mu, k = 1.0 - budgets.mu;
        double dir1 = 0.0, dir2 = 0.0, sum = 0.0;
        for (int n = 0; n < ch->n_subcarriers; ++n) {
            const double up1 = mu * std::log1p(ch->g1[n] * pa.p1[n]) / kLn2;
            const double up2 = mu * std::log1p(ch->g2[n] * pa.p2[n]) / kLn2;
            const double down1 = k * std::log1p(ch->gt1[n] * pa.pr[n]) / kLn2;
            const double down2 = k * std::log1p(ch->gt2[n] * pa.pr[n]) / kLn2;
            dir1 += std::min(up1, down2);
            dir2 += std::min(up2, down1);
            sum += mu * std::log1p(ch->g1[n] * pa.p1[n] + ch->g2[n] * pa.p2[n]) / kLn2;
        }
        return std::min({dir1, dir2, 0.5 * sum});
    }

    // Supergradient of the min: gradient of one active term. Ties pick the
    // sum-rate term over the directional ones, and within a directional term
    // the uplink piece over the downlink piece (fixed, arbitrary).
    void supergradient(const PowerAllocation& pa, PowerAllocation& grad) const {
        const double mu = budgets.mu, k = 1.0 - budgets.mu;
        const int n_sc = ch->n_subcarriers;
        double dir1 = 0.0, dir2 = 0.0, sum = 0.0;
        for (int n = 0; n < n_sc; ++n) {
            const double up1 = mu * std::log1p(ch->g1[n] * pa.p1[n]) / kLn2;
            const double up2 = mu * std::log1p(ch->g2[n] * pa.p2[n]) / kLn2;
            const double down1 = k * std::log1p(ch->gt1[n] * pa.pr[n]) / kLn2;
            const double down2 = k * std::log1p(ch->gt2[n] * pa.pr[n]) / kLn2;
            dir1 += std::min(up1, down2);
            dir2 += std::min(up2, down1);
            sum += mu * std::log1p(ch->g1[n] * pa.p1[n] + ch->g2[n] * pa.p2[n]) / kLn2;
        }
        std::fill(grad.p1.begin(), grad.p1.end(), 0.0);
        std::fill(grad.p2.begin(), grad.p2.end(), 0.0);
        std::fill(grad.pr.begin(), grad.pr.end(), 0.0);
        const double half_sum = 0.5 * sum;
        if (half_sum <= dir1 && half_sum <= dir2) {
            for (int n = 0; n < n_sc; ++n) {
                const double denom = kLn2 * (1.0 + ch->g1[n] * pa.p1[n] + ch->g2[n] * pa.p2[n]);
                grad.p1[n] = 0.5 * mu * ch->g1[n] / denom;
                grad.p2[n] = 0.5 * mu * ch->g2[n] / denom;
            }
        } else if (dir1 <= dir2) {
            for (int n = 0; n < n_sc; ++n) {
                const double up1 = mu * std::log1p(ch->g1[n] * pa.p1[n]) / kLn2;
                const double down2 = k * std::log1p(ch->gt2[n] * pa.pr[n]) / kLn2;
                if (up1 <= down2) {
                    grad.p1[n] = mu * ch->g1[n] / (kLn2 * (1.0 + ch->g1[n] * pa.p1[n]));
                } else {
                    grad.pr[n] = k * ch->gt2[n] / (kLn2 * (1.0 + ch->gt2[n] * pa.pr[n]));
                }
            }
        } else {
            for (int n = 0; n < n_sc; ++n) {
                const double up2 = mu * std::log1p(ch->g2[n] * pa.p2[n]) / kLn2;
                const double down1 = k * std::log1p(ch->gt1[n] * pa.pr[n]) / kLn2;
                if (up2 <= down1) {
                    grad.p2[n] = mu * ch->g2[n] / (kLn2 * (1.0 + ch->g2[n] * pa.p2[n]));
                } else {
                    grad.pr[n] = k * ch->gt1[n] / (kLn2 * (1.0 + ch->gt1[n] * pa.pr[n]));
                }
            }
        }
    }
};

}  // namespace

Type2Solution solve_type2(const ChannelRealization& ch, const Budgets& budgets,
                          const SolverConfig& cfg) {
    const auto n = static_cast<std::size_t>(ch.n_subcarriers);
    Ascent prob{&ch, budgets};

    PowerAllocation pa;
    pa.p1.assign(n, budgets.p1_max / static_cast<double>(n));
    pa.p2.assign(n, budgets.p2_max / static_cast<double>(n));
    pa.pr.assign(n, budgets.pr_max / static_cast<double>(n));
    PowerAllocation grad = pa;

    double bmax = std::max({budgets.p1_max, budgets.p2_max, budgets.pr_max});
    // Primal ascent: step scales with the budget because the iterates do,
    // while the rate gradients shrink as powers grow.
    const double s0 = cfg.step0 * (1.0 + bmax);

    PowerAllocation best = pa;
    double f_best = prob.objective(pa);
    long total = 0;

    const auto step_once = [&](double step) {
        prob.supergradient(pa, grad);
        for (std::size_t i = 0; i < n; ++i) {
            pa.p1[i] += step * grad.p1[i];
            pa.p2[i] += step * grad.p2[i];
            pa.pr[i] += step * grad.pr[i];
        }
        pa.p1 = project_capped_simplex(pa.p1, budgets.p1_max);
        pa.p2 = project_capped_simplex(pa.p2, budgets.p2_max);
        pa.pr = project_capped_simplex(pa.pr, budgets.pr_max);
        const double f = prob.objective(pa);
        if (f > f_best) {
            f_best = f;
            best = pa;
        }
        ++total;
    };

    // Convergence is judged by how much the best value still moves during
    // the final phase (last polish stage, or last tenth of the main loop).
    const int main_mark = cfg.max_iters - std::max(1, cfg.max_iters / 10);
    double f_mark = f_best;
    for (int k = 1; k <= cfg.max_iters; ++k) {
        if (k == main_mark + 1) f_mark = f_best;
        step_once(s0 / std::sqrt(static_cast<double>(k)));
    }
    for (int stage = 1; stage <= cfg.polish_stages; ++stage) {
        pa = best;
        f_mark = f_best;
        const double step = s0 * std::pow(0.6, stage);
        for (int it = 0; it < cfg.polish_iters; ++it) step_once(step);
    }

    Type2Solution sol;
    sol.pa = std::move(best);
    sol.rates = type2_rates(ch, sol.pa, budgets);
    sol.iterations = total;
    sol.converged = (f_best - f_mark) <= 1e-8 * std::max(1.0, std::abs(f_best));
    return sol;
}

}  // namespace twrelay
