#pragma once

// Shared outer loop of the dual decomposition: projected subgradient descent
// on the dual variables with a diminishing step, then ergodic primal
// recovery. The recovered average seeds a short projected supergradient
// ascent on the primal objective itself; near-degenerate optima make the
// plain average mix its candidate solutions too slowly, and the ascent
// closes that last gap at a fraction of the dual loop's cost. The refined
// primal value then serves as the target of a Polyak-step certificate phase
// that drives the dual point toward the same accuracy. Used by both the
// multiple-access and the broadcast subproblem solvers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "twrelay/numerics.hpp"
#include "twrelay/solver_types.hpp"

namespace twrelay::detail {

// Inner solves become unbounded at alpha = 0, so the projection keeps alpha
// strictly positive; a truly slack budget shows up as a budget residual at
// exit, not as alpha = 0.
inline constexpr double kAlphaFloor = 1e-12;

// Primal ascent budget: restart rounds with geometrically shrinking steps,
// diminishing within each round.
inline constexpr int kRefineRounds = 25;
inline constexpr int kRefineIters = 60;

// Alternating refit rounds in the endgame, and the accuracy goals the
// reported pair is scored against (stationarity residual, relative gap).
inline constexpr int kFitRounds = 8;
inline constexpr double kKktGoal = 1e-5;
inline constexpr double kGapGoal = 1e-4;

// Newton polish budget on the dual.
inline constexpr int kNewtonIters = 24;

// Curvature of the dual objective, assembled per subcarrier by implicit
// differentiation of the inner solution: H = sum R^T S^-1 R with R the
// stationarity rows over (lambda, alpha) and S = d(stationarity)/d(power),
// positive definite on the strictly positive entries.
template <int DIM>
struct HessianAccumulator {
    std::array<double, DIM * DIM> H{};

    // rows: act x DIM row-major, spp: act x act row-major, act in {1, 2}
    void add(int act, const double* rows, const double* spp) {
        double U[2 * DIM];
        if (act == 1) {
            if (spp[0] <= 0.0) return;
            for (int c = 0; c < DIM; ++c) U[c] = rows[c] / spp[0];
        } else {
            const double det = spp[0] * spp[3] - spp[1] * spp[2];
            if (det <= 0.0) return;
            for (int c = 0; c < DIM; ++c) {
                U[c] = (spp[3] * rows[c] - spp[1] * rows[DIM + c]) / det;
                U[DIM + c] = (spp[0] * rows[DIM + c] - spp[2] * rows[c]) / det;
            }
        }
        for (int r = 0; r < act; ++r)
            for (int a = 0; a < DIM; ++a)
                for (int b = 0; b < DIM; ++b)
                    H[a * DIM + b] += rows[r * DIM + a] * U[r * DIM + b];
    }
};

// Solve the m x m system M x = b in place by Gaussian elimination with
// partial pivoting; M is row-major, the solution lands in b. Returns false
// when a pivot collapses.
inline bool solve_dense(double* M, double* b, int m) {
    double scale = 0.0;
    for (int i = 0; i < m * m; ++i) scale = std::max(scale, std::abs(M[i]));
    if (scale <= 0.0) return false;
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(M[r * m + col]) > std::abs(M[piv * m + col])) piv = r;
        if (std::abs(M[piv * m + col]) <= 1e-14 * scale) return false;
        if (piv != col) {
            for (int c = col; c < m; ++c) std::swap(M[piv * m + c], M[col * m + c]);
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < m; ++r) {
            const double f = M[r * m + col] / M[col * m + col];
            if (f == 0.0) continue;
            for (int c = col; c < m; ++c) M[r * m + c] -= f * M[col * m + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = m - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < m; ++c) s -= M[r * m + c] * b[c];
        b[r] = s / M[r * m + r];
    }
    return true;
}

template <int NL, int NA>
struct SubgradientOutcome {
    std::array<std::vector<double>, NA> powers;  // recovered primal
    std::array<double, NL> constraints{};        // constraint values at `powers`
    double primal_value = 0.0;                   // min over `constraints`
    double dual_value = 0.0;                     // best dual objective seen
    DualPoint dual;                              // minimizing dual point
    long iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
};

// Problem requirements:
//   static constexpr int n_lambda, n_alpha;
//   int n() const;                               subcarrier count
//   double budget(int j) const;
//   void inner_all(const DualPoint&, std::array<std::vector<double>, n_alpha>&) const;
//   void constraint_values(const std::array<std::vector<double>, n_alpha>&, double*) const;
//       fills n_lambda entries, each already scaled as it enters the dual
//       objective (the sum-rate entry carries its factor 1/2)
//   void active_gradient(const std::array<std::vector<double>, n_alpha>&, const double* cvals,
//                        std::array<std::vector<double>, n_alpha>&) const;
//       gradient of the smallest constraint value (ties resolved by the
//       problem), the supergradient of the min used by the primal ascent
//   double kkt_residual(const std::array<std::vector<double>, n_alpha>&, const DualPoint&) const;
//   void stationarity_rows(const std::array<std::vector<double>, n_alpha>&,
//                          std::vector<std::array<double, n_lambda + n_alpha>>&) const;
//       appends, for every clearly-positive power entry, coefficients r with
//       the stationarity value equal to r . (lambda, alpha)
//   void hessian_terms(const std::array<std::vector<double>, n_alpha>& p, const DualPoint&,
//                      HessianAccumulator<n_lambda + n_alpha>&) const;
//       p must be the inner solution at that dual point
template <class Problem>
SubgradientOutcome<Problem::n_lambda, Problem::n_alpha> run_subgradient(const Problem& prob,
                                                                        const SolverConfig& cfg) {
    constexpr int NL = Problem::n_lambda;
    constexpr int NA = Problem::n_alpha;
    const int n = prob.n();

    const auto project = [](DualPoint& d) {
        d.lambda = project_simplex(d.lambda);
        for (double& a : d.alpha) a = std::max(a, kAlphaFloor);
    };

    DualPoint nu;
    nu.lambda.assign(NL, 1.0);
    nu.alpha.assign(NA, 1.0);
    project(nu);

    double bmax = 1.0;
    for (int j = 0; j < NA; ++j) bmax = std::max(bmax, prob.budget(j));
    const double s0 = cfg.step0 / bmax;

    std::array<std::vector<double>, NA> primal;
    for (auto& v : primal) v.assign(n, 0.0);
    std::array<double, NL> cvals{};
    std::array<double, NA> sums{};

    // Dual objective at nu with the inner problems solved exactly:
    // D(nu) = sum_i lambda_i C_i(P*) + sum_j alpha_j (B_j - sum P*_j).
    const auto evaluate = [&](const DualPoint& d) {
        prob.inner_all(d, primal);
        prob.constraint_values(primal, cvals.data());
        double dv = 0.0;
        for (int i = 0; i < NL; ++i) dv += d.lambda[i] * cvals[i];
        for (int j = 0; j < NA; ++j) {
            double s = 0.0;
            for (double x : primal[j]) s += x;
            sums[j] = s;
            dv += d.alpha[j] * (prob.budget(j) - s);
        }
        return dv;
    };

    // Ergodic recovery: the trailing ~10% of the main phase's inner primal
    // solutions are averaged at exit. Ring buffer, populated only while the
    // diminishing schedule still mixes the candidate solutions.
    const std::size_t window = static_cast<std::size_t>(std::max(1, cfg.max_iters / 10));
    std::vector<double> ring(window * static_cast<std::size_t>(NA) * static_cast<std::size_t>(n));
    std::size_t ring_count = 0;

    double best_dual = std::numeric_limits<double>::infinity();
    DualPoint best_nu = nu;
    long total = 0;

    // Evaluate nu, track the best dual point seen, optionally store the
    // inner solution for ergodic recovery. Returns the dual value. Every
    // record must be followed by one notify before nu moves again.
    const auto record = [&](bool store) {
        const double dv = evaluate(nu);
        if (store) {
            double* slot = ring.data() + (ring_count % window) * NA * n;
            for (int j = 0; j < NA; ++j)
                std::copy(primal[j].begin(), primal[j].end(),
                          slot + static_cast<std::size_t>(j) * n);
            ++ring_count;
        }
        if (dv < best_dual) {
            best_dual = dv;
            best_nu = nu;
        }
        ++total;
        return dv;
    };
    const auto notify = [&](double step, double dv) {
        if (!cfg.on_iteration) return;
        IterationInfo info;
        info.iteration = static_cast<int>(total);
        info.dual_value = dv;
        info.step = step;
        info.dual = &nu;
        cfg.on_iteration(info);
    };

    // Move nu along the negated subgradient of the last evaluation.
    const auto apply_step = [&](double step, double* move2, double* norm2) {
        DualPoint next = nu;
        for (int i = 0; i < NL; ++i) next.lambda[i] += step * (-cvals[i]);
        for (int j = 0; j < NA; ++j) next.alpha[j] += step * (sums[j] - prob.budget(j));
        project(next);
        if (move2) {
            *move2 = *norm2 = 0.0;
            for (int i = 0; i < NL; ++i) {
                const double d = next.lambda[i] - nu.lambda[i];
                *move2 += d * d;
                *norm2 += nu.lambda[i] * nu.lambda[i];
            }
            for (int j = 0; j < NA; ++j) {
                const double d = next.alpha[j] - nu.alpha[j];
                *move2 += d * d;
                *norm2 += nu.alpha[j] * nu.alpha[j];
            }
        }
        nu = next;
    };

    // Main phase: diminishing steps with the relative dual-change stopping
    // test.
    bool rel_stop = false;
    for (int k = 1; k <= cfg.max_iters && !rel_stop; ++k) {
        const double step = s0 / std::sqrt(static_cast<double>(k));
        notify(step, record(true));
        double move2, norm2;
        apply_step(step, &move2, &norm2);
        rel_stop = std::sqrt(move2) <= cfg.epsilon * std::sqrt(norm2);
    }

    SubgradientOutcome<NL, NA> out;
    const std::size_t avg_n = std::min<std::size_t>(ring_count, window);
    for (int j = 0; j < NA; ++j) out.powers[j].assign(n, 0.0);
    for (std::size_t s = 0; s < avg_n; ++s) {
        const double* slot = ring.data() + s * NA * n;
        for (int j = 0; j < NA; ++j)
            for (int i = 0; i < n; ++i)
                out.powers[j][i] += slot[static_cast<std::size_t>(j) * n + i];
    }
    for (int j = 0; j < NA; ++j) {
        double s = 0.0;
        for (double& x : out.powers[j]) {
            x = std::max(0.0, x / static_cast<double>(avg_n));
            s += x;
        }
        // Averaged iterates can sit slightly above the budget; scale back.
        if (s > prob.budget(j) && s > 0.0) {
            const double scale = prob.budget(j) / s;
            for (double& x : out.powers[j]) x *= scale;
        }
    }

    prob.constraint_values(out.powers, out.constraints.data());
    out.primal_value = *std::min_element(out.constraints.begin(), out.constraints.end());

    // Primal ascent from the averaged point.
    {
        std::array<std::vector<double>, NA> cur = out.powers;
        std::array<std::vector<double>, NA> grad;
        for (auto& g : grad) g.assign(n, 0.0);
        double fbest = out.primal_value;
        const double s0r = cfg.step0 * (1.0 + bmax);
        for (int round = 0; round < kRefineRounds; ++round) {
            cur = out.powers;
            const double sr = s0r * std::pow(0.7, round);
            for (int it = 1; it <= kRefineIters; ++it) {
                prob.constraint_values(cur, cvals.data());
                const double f = *std::min_element(cvals.begin(), cvals.end());
                if (f > fbest) {
                    fbest = f;
                    out.powers = cur;
                }
                prob.active_gradient(cur, cvals.data(), grad);
                const double st = sr / std::sqrt(static_cast<double>(it));
                for (int j = 0; j < NA; ++j) {
                    for (int i = 0; i < n; ++i) cur[j][i] += st * grad[j][i];
                    cur[j] = project_capped_simplex(cur[j], prob.budget(j));
                }
            }
        }
        prob.constraint_values(out.powers, out.constraints.data());
        out.primal_value = *std::min_element(out.constraints.begin(), out.constraints.end());
    }

    // Endgame: report the tightest certified primal-dual pair. The
    // stationarity conditions are linear and homogeneous in the multipliers,
    // so a small constrained least squares recovers the dual point implied
    // by the refined primal; alternating refit and inner-resolve rounds then
    // sharpen both sides at once. Every candidate is scored through the same
    // public measurements, so a failed fit simply loses to the trajectory
    // point.
    constexpr int DIM = NL + NA;
    std::array<std::vector<double>, NA> rp = out.powers;
    std::array<double, NL> rc = out.constraints;
    double r_primal = out.primal_value;
    DualPoint r_nu = best_nu;
    double r_dv = best_dual;
    double r_kkt = prob.kkt_residual(rp, r_nu);
    double target = out.primal_value;
    const auto pair_score = [](double kkt, double gap, double primal) {
        return std::max(kkt / kKktGoal,
                        std::max(0.0, gap) / (kGapGoal * std::max(1.0, std::abs(primal))));
    };
    double r_score = pair_score(r_kkt, r_dv - r_primal, r_primal);
    // Offer the pair (p, cand) with dv = D(cand) already measured.
    const auto consider = [&](const std::array<std::vector<double>, NA>& p,
                              const DualPoint& cand, double dv) {
        std::array<double, NL> c;
        prob.constraint_values(p, c.data());
        const double f = *std::min_element(c.begin(), c.end());
        target = std::max(target, f);
        const double kkt = prob.kkt_residual(p, cand);
        const double sc = pair_score(kkt, dv - f, f);
        if (sc < r_score) {
            r_score = sc;
            rp = p;
            rc = c;
            r_primal = f;
            r_nu = cand;
            r_dv = dv;
            r_kkt = kkt;
        }
    };

    // Least-squares multipliers for a fixed primal: minimize the summed
    // squared stationarity over the simplex in lambda (alpha free), by
    // pinning every proper subset of the lambda entries at zero and solving
    // the equality-constrained normal equations.
    const auto fit_dual = [&](const std::array<std::vector<double>, NA>& p, DualPoint& fitted) {
        std::vector<std::array<double, DIM>> rows;
        prob.stationarity_rows(p, rows);
        if (rows.empty()) return false;
        std::array<double, DIM * DIM> Q{};
        for (const auto& row : rows)
            for (int a = 0; a < DIM; ++a)
                for (int b = 0; b < DIM; ++b) Q[a * DIM + b] += row[a] * row[b];
        double ridge = 0.0;
        for (int a = 0; a < DIM; ++a) ridge += Q[a * DIM + a];
        ridge = ridge > 0.0 ? 1e-12 * ridge / DIM : 1e-300;
        double best_res = std::numeric_limits<double>::infinity();
        std::array<double, DIM> best_x{};
        bool found = false;
        for (int mask = 0; mask + 1 < (1 << NL); ++mask) {
            std::array<int, DIM> free_idx;
            int m = 0;
            for (int i = 0; i < NL; ++i)
                if (!(mask & (1 << i))) free_idx[m++] = i;
            const int n_free_l = m;
            for (int j = 0; j < NA; ++j) free_idx[m++] = NL + j;
            const int dim = m + 1;
            std::array<double, (DIM + 1) * (DIM + 1)> M{};
            std::array<double, DIM + 1> rhs{};
            for (int r = 0; r < m; ++r) {
                for (int c = 0; c < m; ++c) {
                    double q = Q[free_idx[r] * DIM + free_idx[c]];
                    if (r == c) q += ridge;
                    M[r * dim + c] = 2.0 * q;
                }
                M[r * dim + m] = r < n_free_l ? 1.0 : 0.0;
                M[m * dim + r] = r < n_free_l ? 1.0 : 0.0;
            }
            rhs[m] = 1.0;
            if (!solve_dense(M.data(), rhs.data(), dim)) continue;
            std::array<double, DIM> x{};
            bool ok = true;
            for (int r = 0; r < m; ++r) {
                x[free_idx[r]] = rhs[r];
                if (r < n_free_l && rhs[r] < -1e-9) ok = false;
                if (r >= n_free_l && rhs[r] <= 0.0) ok = false;
            }
            if (!ok) continue;
            double res = 0.0;
            for (const auto& row : rows) {
                double s = 0.0;
                for (int a = 0; a < DIM; ++a) s += row[a] * x[a];
                res += s * s;
            }
            if (res < best_res) {
                best_res = res;
                best_x = x;
                found = true;
            }
        }
        if (!found) return false;
        fitted.lambda.assign(NL, 0.0);
        fitted.alpha.assign(NA, 0.0);
        for (int i = 0; i < NL; ++i) fitted.lambda[i] = std::max(0.0, best_x[i]);
        for (int j = 0; j < NA; ++j) fitted.alpha[j] = best_x[NL + j];
        project(fitted);
        return true;
    };

    {
        std::array<std::vector<double>, NA> pcur = out.powers;
        std::array<std::vector<double>, NA> ptent, pmix;
        for (auto& v : pmix) v.assign(n, 0.0);
        DualPoint fitted;
        std::array<double, NL> c;
        for (int round = 0; round < kFitRounds; ++round) {
            if (!fit_dual(pcur, fitted)) break;
            nu = fitted;
            const double dv = record(false);
            notify(0.0, dv);
            consider(pcur, fitted, dv);
            // Step toward the inner solution at the fitted point (pulled
            // back inside the budgets), but only as far as the primal value
            // allows: the line search keeps every candidate at least as good
            // as the refined primal, and ties prefer the consistent end of
            // the segment.
            for (int j = 0; j < NA; ++j)
                ptent[j] = project_capped_simplex(primal[j], prob.budget(j));
            double fmax = -std::numeric_limits<double>::infinity();
            double theta_best = 0.0;
            for (int t = 0; t <= 20; ++t) {
                const double th = t / 20.0;
                for (int j = 0; j < NA; ++j)
                    for (int i = 0; i < n; ++i)
                        pmix[j][i] = (1.0 - th) * pcur[j][i] + th * ptent[j][i];
                prob.constraint_values(pmix, c.data());
                const double f = *std::min_element(c.begin(), c.end());
                if (f >= fmax - 1e-12 * std::max(1.0, std::abs(fmax))) {
                    fmax = std::max(fmax, f);
                    theta_best = th;
                }
            }
            if (theta_best == 0.0) break;
            for (int j = 0; j < NA; ++j)
                for (int i = 0; i < n; ++i)
                    pcur[j][i] = (1.0 - theta_best) * pcur[j][i] + theta_best * ptent[j][i];
        }
    }

    // Newton polish: along its smooth pieces the dual objective has explicit
    // curvature, and near a generic optimum one piece contains a whole
    // neighborhood, so damped Newton steps on the simplex manifold reach in
    // a dozen evaluations what the subgradient schedule crawls toward. A run
    // that stalls simply loses the pair scoring.
    const auto newton_polish = [&](const DualPoint& start) {
        nu = start;
        project(nu);
        double dv = record(false);
        notify(0.0, dv);
        for (int iter = 0; iter < kNewtonIters; ++iter) {
            HessianAccumulator<DIM> acc;
            prob.hessian_terms(primal, nu, acc);
            std::array<int, DIM> idx;
            int m = 0;
            // Free lambdas: the current support, plus any pinned coordinate
            // whose slope already undercuts the support's (the dual can
            // still descend by growing it).
            double cmin_free = std::numeric_limits<double>::infinity();
            for (int i = 0; i < NL; ++i)
                if (nu.lambda[i] > 1e-10) cmin_free = std::min(cmin_free, cvals[i]);
            for (int i = 0; i < NL; ++i)
                if (nu.lambda[i] > 1e-10 || cvals[i] < cmin_free) idx[m++] = i;
            const int nfl = m;
            if (nfl == 0) break;
            for (int j = 0; j < NA; ++j) idx[m++] = NL + j;
            const int dim = m + 1;
            double trace = 0.0;
            for (int r = 0; r < m; ++r) trace += acc.H[idx[r] * DIM + idx[r]];
            // Trial evaluations overwrite cvals and sums, so the right-hand
            // side at the base point has to be kept across the damping
            // attempts.
            std::array<double, DIM + 1> rhs0{};
            for (int r = 0; r < m; ++r)
                rhs0[r] = r < nfl ? -cvals[idx[r]] : sums[idx[r] - NL] - prob.budget(idx[r] - NL);
            const DualPoint base = nu;
            const double dv_base = dv;
            bool accepted = false;
            bool capped = false;
            double damping = 0.0;
            // At a simplex vertex the active waterlevels coincide and the
            // stationarity rows collapse, leaving the curvature rank
            // deficient there; a growing diagonal shift then turns the step
            // into a safeguarded gradient move that re-enters the face.
            for (int attempt = 0; attempt < 4 && !accepted; ++attempt) {
                std::array<double, (DIM + 1) * (DIM + 1)> M{};
                std::array<double, DIM + 1> rhs = rhs0;
                for (int r = 0; r < m; ++r) {
                    for (int c = 0; c < m; ++c) M[r * dim + c] = acc.H[idx[r] * DIM + idx[c]];
                    M[r * dim + r] += damping;
                    M[r * dim + m] = r < nfl ? 1.0 : 0.0;
                    M[m * dim + r] = r < nfl ? 1.0 : 0.0;
                }
                const double next_damping =
                    damping > 0.0 ? damping * 100.0 : 1e-8 * std::max(trace, 1.0) / m;
                if (!solve_dense(M.data(), rhs.data(), dim)) {
                    damping = next_damping;
                    continue;
                }
                // Stay on the face: lambdas may not cross zero within the
                // step.
                double tmax = 1.0;
                for (int r = 0; r < nfl; ++r)
                    if (rhs[r] < 0.0 && base.lambda[idx[r]] < -tmax * rhs[r])
                        tmax = -base.lambda[idx[r]] / rhs[r];
                capped = tmax < 1.0;
                double t = tmax;
                for (int half = 0; half < 14 && !accepted; ++half, t *= 0.5) {
                    nu = base;
                    for (int r = 0; r < m; ++r) {
                        if (r < nfl) nu.lambda[idx[r]] += t * rhs[r];
                        else nu.alpha[idx[r] - NL] += t * rhs[r];
                    }
                    project(nu);
                    const double dv_t = record(false);
                    notify(0.0, dv_t);
                    if (dv_t < dv_base) {
                        dv = dv_t;
                        accepted = true;
                    }
                }
                if (!accepted) damping = next_damping;
            }
            if (!accepted) {
                nu = base;
                dv = record(false);
                notify(0.0, dv);
                break;
            }
            // A step truncated at a face or taken under damping may barely
            // move; only a full undamped one signals convergence through a
            // vanishing decrease.
            if (!capped && damping == 0.0 &&
                dv_base - dv <= 1e-14 * std::max(1.0, std::abs(dv)))
                break;
        }
        // The inner solution at the polished point is stationary by
        // construction and, at an accurate optimum, feasible up to the alpha
        // slope; offer it and the refined primal as pairs.
        std::array<std::vector<double>, NA> pp;
        for (int j = 0; j < NA; ++j) pp[j] = project_capped_simplex(primal[j], prob.budget(j));
        consider(pp, nu, dv);
        const auto keep = rp;
        consider(keep, nu, dv);
    };
    newton_polish(r_nu);
    if (r_score > 1.0) newton_polish(best_nu);

    // Certificate phase: tighten the dual point with target-value steps.
    // The best feasible primal value is a valid target (it never exceeds the
    // dual minimum), so s = 0.7 (D(nu) - target) / |eta|^2 is a Polyak step
    // and shrinks the duality gap much faster than the fixed schedule.
    const long certificate_budget = static_cast<long>(std::max(0, cfg.polish_stages)) *
                                    static_cast<long>(std::max(0, cfg.polish_iters));
    if (certificate_budget > 0) {
        nu = best_nu;
        project(nu);
        for (long it = 0; it < certificate_budget; ++it) {
            const double dv = record(false);
            // Size the step against the part of the subgradient the
            // projection keeps: uniform lambda shifts and coordinates blocked
            // at the boundary do not move nu, and near the optimum they
            // dominate the raw norm.
            std::array<double, NL> tl;
            std::array<bool, NL> pin{};
            for (int i = 0; i < NL; ++i) tl[i] = -cvals[i];
            for (int pass = 0; pass < NL; ++pass) {
                double mean = 0.0;
                int free_count = 0;
                for (int i = 0; i < NL; ++i)
                    if (!pin[i]) {
                        mean += -cvals[i];
                        ++free_count;
                    }
                if (free_count == 0) break;
                mean /= free_count;
                bool changed = false;
                for (int i = 0; i < NL; ++i) {
                    if (pin[i]) {
                        tl[i] = 0.0;
                        continue;
                    }
                    tl[i] = -cvals[i] - mean;
                    if (nu.lambda[i] <= 1e-12 && tl[i] < 0.0) {
                        pin[i] = true;
                        changed = true;
                    }
                }
                if (!changed) break;
            }
            double gnorm2 = 0.0;
            for (int i = 0; i < NL; ++i) gnorm2 += tl[i] * tl[i];
            for (int j = 0; j < NA; ++j) {
                double d = sums[j] - prob.budget(j);
                if (nu.alpha[j] <= kAlphaFloor && d < 0.0) d = 0.0;
                gnorm2 += d * d;
            }
            const double gap = dv - target;
            double s = 0.0;
            if (gap > 1e-9 * std::max(1.0, std::abs(target)) && gnorm2 > 1e-30) {
                s = 0.7 * gap / gnorm2;
                // Near a kink the tangent subgradient can be tiny while the
                // gap is not, and the raw ratio then launches the point far
                // beyond anything the projection can resolve. Bounding the
                // displacement keeps the move on the scale of the variables.
                const double dlen = std::sqrt(gnorm2);
                const double dmax = 4.0 * (1.0 + bmax);
                if (s * dlen > dmax) s = dmax / dlen;
            }
            notify(s, dv);
            if (s <= 0.0) break;
            apply_step(s, nullptr, nullptr);
        }
        // The phase may have found a better dual point for the reported
        // primal.
        if (best_dual < r_dv) {
            const auto keep = rp;
            consider(keep, best_nu, best_dual);
        }
    }

    out.powers = std::move(rp);
    out.constraints = rc;
    out.primal_value = r_primal;
    out.dual_value = r_dv;
    out.dual = r_nu;
    out.iterations = total;
    out.kkt_residual = r_kkt;
    const double gap = r_dv - r_primal;
    out.converged = rel_stop || gap <= 1e-5 * std::max(1.0, std::abs(r_primal));
    return out;
}

}  // namespace twrelay::detail
