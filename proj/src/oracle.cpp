#include "twrelay/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "twrelay/numerics.hpp"

namespace twrelay {

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Joint enumeration budget per grid round. The requested grid_points is
// honored only while the product of per-vector point counts stays under the
// cap; zoom rounds and polishing recover the resolution the cap removes.
constexpr long kEvalCap = 200000;

using Vec = std::vector<double>;
using Point = std::array<Vec, 3>;  // up to three active power vectors

struct Search {
    const ChannelRealization* ch;
    Budgets b;
    GridObjective kind;  // ma_only, bc_only or type2
    int nv;
    std::array<double, 3> vb;  // budget per active vector

    double eval(const Point& p) const {
        const double mu = b.mu, k = 1.0 - b.mu;
        const int n = ch->n_subcarriers;
        if (kind == GridObjective::bc_only) {
            double c1 = 0.0, c2 = 0.0;
            for (int i = 0; i < n; ++i) {
                c1 += std::log1p(ch->gt1[i] * p[0][i]);
                c2 += std::log1p(ch->gt2[i] * p[0][i]);
            }
            return (k / kLn2) * std::min(c1, c2);
        }
        if (kind == GridObjective::ma_only) {
            double c1 = 0.0, c2 = 0.0, cs = 0.0;
            for (int i = 0; i < n; ++i) {
                c1 += std::log1p(ch->g1[i] * p[0][i]);
                c2 += std::log1p(ch->g2[i] * p[1][i]);
                cs += std::log1p(ch->g1[i] * p[0][i] + ch->g2[i] * p[1][i]);
            }
            return (mu / kLn2) * std::min({c1, c2, 0.5 * cs});
        }
        double dir1 = 0.0, dir2 = 0.0, cs = 0.0;
        for (int i = 0; i < n; ++i) {
            const double up1 = mu * std::log1p(ch->g1[i] * p[0][i]);
            const double up2 = mu * std::log1p(ch->g2[i] * p[1][i]);
            const double down1 = k * std::log1p(ch->gt1[i] * p[2][i]);
            const double down2 = k * std::log1p(ch->gt2[i] * p[2][i]);
            dir1 += std::min(up1, down2);
            dir2 += std::min(up2, down1);
            cs += mu * std::log1p(ch->g1[i] * p[0][i] + ch->g2[i] * p[1][i]);
        }
        return std::min({dir1, dir2, 0.5 * cs}) / kLn2;
    }

    // Supergradient of the max-min objective: gradient of one active term.
    void supergrad(const Point& p, Point& g) const {
        const double mu = b.mu, k = 1.0 - b.mu;
        const int n = ch->n_subcarriers;
        for (int v = 0; v < nv; ++v) std::fill(g[v].begin(), g[v].end(), 0.0);
        if (kind == GridObjective::bc_only) {
            double c1 = 0.0, c2 = 0.0;
            for (int i = 0; i < n; ++i) {
                c1 += std::log1p(ch->gt1[i] * p[0][i]);
                c2 += std::log1p(ch->gt2[i] * p[0][i]);
            }
            const Vec& gain = (c1 <= c2) ? ch->gt1 : ch->gt2;
            for (int i = 0; i < n; ++i)
                g[0][i] = (k / kLn2) * gain[i] / (1.0 + gain[i] * p[0][i]);
            return;
        }
        if (kind == GridObjective::ma_only) {
            double c1 = 0.0, c2 = 0.0, cs = 0.0;
            for (int i = 0; i < n; ++i) {
                c1 += std::log1p(ch->g1[i] * p[0][i]);
                c2 += std::log1p(ch->g2[i] * p[1][i]);
                cs += std::log1p(ch->g1[i] * p[0][i] + ch->g2[i] * p[1][i]);
            }
            if (0.5 * cs <= c1 && 0.5 * cs <= c2) {
                for (int i = 0; i < n; ++i) {
                    const double d = 1.0 + ch->g1[i] * p[0][i] + ch->g2[i] * p[1][i];
                    g[0][i] = 0.5 * (mu / kLn2) * ch->g1[i] / d;
                    g[1][i] = 0.5 * (mu / kLn2) * ch->g2[i] / d;
                }
            } else if (c1 <= c2) {
                for (int i = 0; i < n; ++i)
                    g[0][i] = (mu / kLn2) * ch->g1[i] / (1.0 + ch->g1[i] * p[0][i]);
            } else {
                for (int i = 0; i < n; ++i)
                    g[1][i] = (mu / kLn2) * ch->g2[i] / (1.0 + ch->g2[i] * p[1][i]);
            }
            return;
        }
        double dir1 = 0.0, dir2 = 0.0, cs = 0.0;
        for (int i = 0; i < n; ++i) {
            dir1 += std::min(mu * std::log1p(ch->g1[i] * p[0][i]),
                             k * std::log1p(ch->gt2[i] * p[2][i]));
            dir2 += std::min(mu * std::log1p(ch->g2[i] * p[1][i]),
                             k * std::log1p(ch->gt1[i] * p[2][i]));
            cs += mu * std::log1p(ch->g1[i] * p[0][i] + ch->g2[i] * p[1][i]);
        }
        if (0.5 * cs <= dir1 && 0.5 * cs <= dir2) {
            for (int i = 0; i < n; ++i) {
                const double d = 1.0 + ch->g1[i] * p[0][i] + ch->g2[i] * p[1][i];
                g[0][i] = 0.5 * (mu / kLn2) * ch->g1[i] / d;
                g[1][i] = 0.5 * (mu / kLn2) * ch->g2[i] / d;
            }
        } else if (dir1 <= dir2) {
            for (int i = 0; i < n; ++i) {
                if (mu * std::log1p(ch->g1[i] * p[0][i]) <=
                    k * std::log1p(ch->gt2[i] * p[2][i])) {
                    g[0][i] = (mu / kLn2) * ch->g1[i] / (1.0 + ch->g1[i] * p[0][i]);
                } else {
                    g[2][i] = (k / kLn2) * ch->gt2[i] / (1.0 + ch->gt2[i] * p[2][i]);
                }
            }
        } else {
            for (int i = 0; i < n; ++i) {
                if (mu * std::log1p(ch->g2[i] * p[1][i]) <=
                    k * std::log1p(ch->gt1[i] * p[2][i])) {
                    g[1][i] = (mu / kLn2) * ch->g2[i] / (1.0 + ch->g2[i] * p[1][i]);
                } else {
                    g[2][i] = (k / kLn2) * ch->gt1[i] / (1.0 + ch->gt1[i] * p[2][i]);
                }
            }
        }
    }
};

// Grid points of one budget face {p >= 0, sum p = B} with m divisions,
// optionally restricted to the box |p_i - center_i| <= w. The window clips
// the loop ranges, so zoomed rounds stay cheap even for very large m.
void face_points(int n, double B, long m, const Vec* center, double w, std::vector<Vec>& out) {
    out.clear();
    const double h = B / static_cast<double>(m);
    const auto range = [&](int coord, long& lo, long& hi) {
        lo = 0;
        hi = m;
        if (!center) return;
        const double c = (*center)[coord];
        lo = std::max<long>(0, static_cast<long>(std::floor((c - w) / h)));
        hi = std::min<long>(m, static_cast<long>(std::ceil((c + w) / h)));
    };
    if (n == 1) {
        out.push_back({B});
        return;
    }
    if (n == 2) {
        long lo, hi;
        range(0, lo, hi);
        for (long k = lo; k <= hi; ++k) {
            Vec p{static_cast<double>(k) * h, B - static_cast<double>(k) * h};
            p[1] = std::max(0.0, p[1]);
            out.push_back(std::move(p));
        }
        return;
    }
    long lo1, hi1, lo2, hi2;
    range(0, lo1, hi1);
    range(1, lo2, hi2);
    for (long k1 = lo1; k1 <= hi1; ++k1) {
        for (long k2 = lo2; k2 <= std::min(hi2, m - k1); ++k2) {
            Vec p{static_cast<double>(k1) * h, static_cast<double>(k2) * h,
                  B - static_cast<double>(k1 + k2) * h};
            p[2] = std::max(0.0, p[2]);
            out.push_back(std::move(p));
        }
    }
}

long face_count(int n, int m) {
    if (n == 1) return 1;
    if (n == 2) return m + 1;
    return static_cast<long>(m + 1) * (m + 2) / 2;
}

// The largest per-axis division count whose joint enumeration stays under
// the cap.
int capped_divisions(int n, int nv, int requested) {
    int m = 1;
    while (m < requested) {
        long total = 1;
        bool over = false;
        for (int v = 0; v < nv && !over; ++v) {
            total *= face_count(n, m + 1);
            if (total > kEvalCap) over = true;
        }
        if (over) break;
        ++m;
    }
    return m;
}

struct Candidate {
    double value = -std::numeric_limits<double>::infinity();
    Point p;
};

// Enumerate the product grid of all active vectors, reporting the best few
// well-separated candidates.
void grid_round(const Search& s, long m, const Point* center, double w_frac,
                std::vector<Candidate>& top, int keep) {
    std::array<std::vector<Vec>, 3> lists;
    for (int v = 0; v < s.nv; ++v) {
        face_points(s.ch->n_subcarriers, s.vb[v], m, center ? &(*center)[v] : nullptr,
                    w_frac * s.vb[v], lists[v]);
        if (lists[v].empty()) return;
    }
    const double sep = 0.05 * (1.0 + s.vb[0]);
    const auto offer = [&](const Point& p, double val) {
        for (auto& c : top) {
            double dist = 0.0;
            for (int v = 0; v < s.nv; ++v)
                for (int i = 0; i < s.ch->n_subcarriers; ++i)
                    dist += std::abs(p[v][i] - c.p[v][i]);
            if (dist < sep) {
                if (val > c.value) {
                    c.value = val;
                    c.p = p;
                }
                return;
            }
        }
        top.push_back({val, p});
        std::sort(top.begin(), top.end(),
                  [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
        if (static_cast<int>(top.size()) > keep) top.resize(keep);
    };

    Point p;
    const std::size_t c0 = lists[0].size();
    const std::size_t c1 = s.nv > 1 ? lists[1].size() : 1;
    const std::size_t c2 = s.nv > 2 ? lists[2].size() : 1;
    for (std::size_t i0 = 0; i0 < c0; ++i0) {
        p[0] = lists[0][i0];
        for (std::size_t i1 = 0; i1 < c1; ++i1) {
            if (s.nv > 1) p[1] = lists[1][i1];
            for (std::size_t i2 = 0; i2 < c2; ++i2) {
                if (s.nv > 2) p[2] = lists[2][i2];
                offer(p, s.eval(p));
            }
        }
    }
}

// Pairwise mass exchanges within each vector at shrinking step sizes; exact
// on the face and immune to the kinks that stall gradient steps.
void exchange_sweeps(const Search& s, Candidate& c) {
    const int n = s.ch->n_subcarriers;
    if (n < 2) return;
    for (int v = 0; v < s.nv; ++v) {
        double delta = 0.25 * s.vb[v];
        // halving schedule; ~45 levels reach machine precision
        for (int level = 0; level < 48 && delta > 1e-13 * (s.vb[v] + 1.0); ++level, delta *= 0.5) {
            bool improved = true;
            for (int pass = 0; pass < 4 && improved; ++pass) {
                improved = false;
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j) {
                        if (i == j || c.p[v][j] < delta) continue;
                        c.p[v][i] += delta;
                        c.p[v][j] -= delta;
                        const double val = s.eval(c.p);
                        if (val > c.value) {
                            c.value = val;
                            improved = true;
                        } else {
                            c.p[v][i] -= delta;
                            c.p[v][j] += delta;
                        }
                    }
                }
            }
        }
    }
}

void supergrad_polish(const Search& s, Candidate& c, int stages, int iters) {
    Point p = c.p;
    Point g;
    for (int v = 0; v < s.nv; ++v) g[v].assign(s.ch->n_subcarriers, 0.0);
    double bmax = 1.0;
    for (int v = 0; v < s.nv; ++v) bmax = std::max(bmax, s.vb[v]);
    for (int stage = 0; stage < stages; ++stage) {
        p = c.p;
        const double step = 0.1 * (1.0 + bmax) * std::pow(0.7, stage);
        for (int it = 0; it < iters; ++it) {
            s.supergrad(p, g);
            for (int v = 0; v < s.nv; ++v) {
                for (int i = 0; i < s.ch->n_subcarriers; ++i) p[v][i] += step * g[v][i];
                p[v] = project_capped_simplex(p[v], s.vb[v]);
            }
            const double val = s.eval(p);
            if (val > c.value) {
                c.value = val;
                c.p = p;
            }
        }
    }
}

OracleResult search_one(const Search& s, int grid_points, bool polish) {
    const int n = s.ch->n_subcarriers;
    const int m0 = capped_divisions(n, s.nv, grid_points);
    std::vector<Candidate> top;
    grid_round(s, m0, nullptr, 0.0, top, polish ? 3 : 1);

    if (polish) {
        // Zoom multiplier keeping the windowed enumeration under the cap:
        // the window spans ~5 coarse cells per axis, so the refined grid has
        // about (5z)^(axes) points.
        const int axes = (n - 1) * s.nv;
        double z = 50.0;
        if (axes > 0) z = (std::pow(static_cast<double>(kEvalCap), 1.0 / axes) - 1.0) / 5.0;
        z = std::min(z, 50.0);

        Candidate uniform;
        for (int v = 0; v < s.nv; ++v) uniform.p[v].assign(n, s.vb[v] / n);
        uniform.value = s.eval(uniform.p);
        top.push_back(uniform);

        for (auto& c : top) {
            if (z >= 2.0) {
                long m = m0;
                for (int round = 0; round < 3 && m < 10000000; ++round) {
                    // window of +-2.5 cells of the previous round
                    const double w_frac = 2.5 / static_cast<double>(m);
                    m = std::min<long>(10000000, static_cast<long>(m * z));
                    std::vector<Candidate> local{c};
                    grid_round(s, m, &c.p, w_frac, local, 1);
                    if (local[0].value > c.value) c = local[0];
                }
            }
            supergrad_polish(s, c, 30, 400);
            exchange_sweeps(s, c);
            supergrad_polish(s, c, 10, 200);
            exchange_sweeps(s, c);
        }
        std::sort(top.begin(), top.end(),
                  [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
    }

    OracleResult out;
    out.rate = top[0].value;
    out.pa.p1.assign(n, 0.0);
    out.pa.p2.assign(n, 0.0);
    out.pa.pr.assign(n, 0.0);
    if (s.kind == GridObjective::bc_only) {
        out.pa.pr = top[0].p[0];
    } else {
        out.pa.p1 = top[0].p[0];
        out.pa.p2 = top[0].p[1];
        if (s.kind == GridObjective::type2) out.pa.pr = top[0].p[2];
    }
    return out;
}

}  // namespace

OracleResult grid_maxmin(const ChannelRealization& ch, const Budgets& budgets,
                         GridObjective objective, int grid_points, bool polish) {
    if (ch.n_subcarriers > 3) {
        throw std::invalid_argument("grid_maxmin: N > 3 is combinatorially infeasible");
    }
    if (grid_points < 50) {
        throw std::invalid_argument("grid_maxmin: grid_points must be >= 50");
    }
    // Accuracy note: every objective is a min of terms with per-coordinate
    // slope at most max_gain * max(mu, 1-mu)/ln2 (slope of log2(1+g*p) at 0),
    // so the raw grid value sits within L * h of the face optimum with
    // h = budget/m; zooming and polishing shrink that gap far below it.
    if (objective == GridObjective::type1) {
        Search ma{&ch, budgets, GridObjective::ma_only, 2, {budgets.p1_max, budgets.p2_max, 0.0}};
        Search bc{&ch, budgets, GridObjective::bc_only, 1, {budgets.pr_max, 0.0, 0.0}};
        OracleResult rma = search_one(ma, grid_points, polish);
        OracleResult rbc = search_one(bc, grid_points, polish);
        OracleResult out;
        out.rate = std::min(rma.rate, rbc.rate);
        out.pa.p1 = std::move(rma.pa.p1);
        out.pa.p2 = std::move(rma.pa.p2);
        out.pa.pr = std::move(rbc.pa.pr);
        return out;
    }
    Search s;
    s.ch = &ch;
    s.b = budgets;
    s.kind = objective;
    if (objective == GridObjective::bc_only) {
        s.nv = 1;
        s.vb = {budgets.pr_max, 0.0, 0.0};
    } else if (objective == GridObjective::ma_only) {
        s.nv = 2;
        s.vb = {budgets.p1_max, budgets.p2_max, 0.0};
    } else {
        s.nv = 3;
        s.vb = {budgets.p1_max, budgets.p2_max, budgets.pr_max};
    }
    return search_one(s, grid_points, polish);
}

}  // namespace twrelay
