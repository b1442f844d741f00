#include "twrelay/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twrelay {

namespace {

bool all_finite(const CubicCoefficients& c) {
    return std::isfinite(c.a3) && std::isfinite(c.a2) && std::isfinite(c.a1) &&
           std::isfinite(c.a0);
}

double eval_poly(const CubicCoefficients& c, double x) {
    return ((c.a3 * x + c.a2) * x + c.a1) * x + c.a0;
}

double eval_dpoly(const CubicCoefficients& c, double x) {
    return (3.0 * c.a3 * x + 2.0 * c.a2) * x + c.a1;
}

void newton_polish(const CubicCoefficients& c, double& x) {
    for (int i = 0; i < 2; ++i) {
        const double d = eval_dpoly(c, x);
        if (d == 0.0) return;
        const double step = eval_poly(c, x) / d;
        if (!std::isfinite(step)) return;
        x -= step;
    }
}

// Both real roots of a2*x^2 + a1*x + a0 (a2 != 0), cancellation-safe.
std::vector<double> quadratic_real_roots(double a2, double a1, double a0) {
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc < 0.0) return {};
    const double sdisc = std::sqrt(disc);
    const double q = -0.5 * (a1 + std::copysign(sdisc, a1));
    if (q == 0.0) return {0.0};  // a1 == 0 and disc == 0
    const double r1 = q / a2;
    const double r2 = a0 / q;
    if (r1 == r2) return {r1};
    return {std::min(r1, r2), std::max(r1, r2)};
}

void dedup_sorted(std::vector<double>& r) {
    std::vector<double> out;
    for (double x : r) {
        if (!out.empty()) {
            const double scale = std::max({1.0, std::fabs(out.back()), std::fabs(x)});
            if (std::fabs(x - out.back()) <= 1e-10 * scale) continue;
        }
        out.push_back(x);
    }
    r = std::move(out);
}

}  // namespace

std::vector<double> real_roots_cubic(const CubicCoefficients& c) {
    if (!all_finite(c)) throw std::invalid_argument("real_roots_cubic: non-finite coefficient");

    if (c.a3 == 0.0) {
        if (c.a2 == 0.0) {
            if (c.a1 == 0.0) {
                throw std::invalid_argument("real_roots_cubic: all coefficients zero or constant");
            }
            return {-c.a0 / c.a1};
        }
        auto r = quadratic_real_roots(c.a2, c.a1, c.a0);
        dedup_sorted(r);
        return r;
    }

    // Normalize and depress: x = t - b/3 turns x^3 + b x^2 + cc x + d into
    // t^3 + p t + q.
    const double b = c.a2 / c.a3;
    const double cc = c.a1 / c.a3;
    const double d = c.a0 / c.a3;
    const double p = cc - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    const double shift = -b / 3.0;

    const double half_q = 0.5 * q;
    const double third_p = p / 3.0;
    const double disc = half_q * half_q + third_p * third_p * third_p;

    std::vector<double> roots;
    if (disc > 0.0) {
        // One real root; the A/B form avoids cancellation between the cube roots.
        const double s = std::sqrt(disc);
        const double A = -std::copysign(std::cbrt(std::fabs(half_q) + s), q);
        const double B = (A == 0.0) ? 0.0 : -third_p / A;
        roots.push_back(A + B + shift);
    } else if (disc == 0.0) {
        if (q == 0.0) {
            roots.push_back(shift);  // triple root
        } else {
            const double u = std::cbrt(-half_q);
            roots.push_back(2.0 * u + shift);
            roots.push_back(-u + shift);
        }
    } else {
        // Three real roots (casus irreducibilis): trigonometric form.
        const double m = 2.0 * std::sqrt(-third_p);
        const double arg = std::clamp(-half_q / std::sqrt(-third_p * third_p * third_p), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        constexpr double two_thirds_pi = 2.0 * std::numbers::pi / 3.0;
        roots.push_back(m * std::cos(phi) + shift);
        roots.push_back(m * std::cos(phi - two_thirds_pi) + shift);
        roots.push_back(m * std::cos(phi + two_thirds_pi) + shift);
    }

    for (double& r : roots) newton_polish(c, r);
    std::sort(roots.begin(), roots.end());
    dedup_sorted(roots);
    return roots;
}

std::optional<double> positive_root_quadratic(double a2, double a1, double a0) {
    if (!std::isfinite(a2) || !std::isfinite(a1) || !std::isfinite(a0)) {
        throw std::invalid_argument("positive_root_quadratic: non-finite coefficient");
    }
    if (a2 == 0.0) {
        if (a1 == 0.0) throw std::invalid_argument("positive_root_quadratic: degenerate (a2 == a1 == 0)");
        const double r = -a0 / a1;
        if (r > 0.0) return r;
        return std::nullopt;
    }
    auto roots = quadratic_real_roots(a2, a1, a0);
    std::optional<double> best;
    for (double r : roots) {
        if (r > 0.0 && (!best || r > *best)) best = r;
    }
    return best;
}

std::vector<double> project_simplex(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("project_simplex: empty input");
    const std::size_t m = v.size();
    std::vector<double> w = v;
    std::vector<char> active(m, 1);
    std::size_t n_active = m;

    // Michelot: equalize on the current active set, drop negatives, repeat.
    // Terminates in at most m passes since the active set only shrinks.
    for (;;) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (active[i]) sum += w[i];
        }
        const double shift = (sum - 1.0) / static_cast<double>(n_active);
        bool dropped = false;
        for (std::size_t i = 0; i < m; ++i) {
            if (!active[i]) continue;
            w[i] -= shift;
            if (w[i] < 0.0) {
                w[i] = 0.0;
                active[i] = 0;
                --n_active;
                dropped = true;
            }
        }
        if (!dropped) break;
        if (n_active == 0) {
            // All mass removed by rounding; put everything on the largest entry.
            const std::size_t k = static_cast<std::size_t>(
                std::max_element(v.begin(), v.end()) - v.begin());
            std::fill(w.begin(), w.end(), 0.0);
            w[k] = 1.0;
            return w;
        }
    }
    // The equalization subtracts numbers on the scale of the input, so a
    // large-magnitude v leaves the sum off by its rounding. One more pass at
    // the output's O(1) scale brings the sum back to machine precision.
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += w[i];
    const double shift = (sum - 1.0) / static_cast<double>(n_active);
    for (std::size_t i = 0; i < m; ++i) {
        if (active[i]) w[i] = std::max(0.0, w[i] - shift);
    }
    return w;
}

std::vector<double> project_simplex_scaled(const std::vector<double>& v, double scale) {
    if (scale <= 0.0) throw std::invalid_argument("project_simplex_scaled: scale must be > 0");
    std::vector<double> u(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i] / scale;
    std::vector<double> w = project_simplex(u);
    for (double& x : w) x *= scale;
    return w;
}

std::vector<double> project_nonneg(const std::vector<double>& v) {
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i], 0.0);
    return w;
}

std::vector<double> project_capped_simplex(const std::vector<double>& v, double cap) {
    if (cap <= 0.0) return std::vector<double>(v.size(), 0.0);
    std::vector<double> w = project_nonneg(v);
    double sum = 0.0;
    for (double x : w) sum += x;
    if (sum <= cap) return w;
    return project_simplex_scaled(v, cap);
}

}  // namespace twrelay
