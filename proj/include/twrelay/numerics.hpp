#pragma once

#include <optional>
#include <vector>

namespace twrelay {

/// Coefficients of a3*x^3 + a2*x^2 + a1*x + a0.
/// a3 == 0 is allowed; the solver then falls back to the quadratic/linear path.
struct CubicCoefficients {
    double a3 = 0.0;
    double a2 = 0.0;
    double a1 = 0.0;
    double a0 = 0.0;
};

/// All real roots, ascending, deduplicated at 1e-10 relative spacing.
/// Cubic case uses the depressed-cubic substitution with the trigonometric
/// branch when all three roots are real, so no complex arithmetic is needed.
/// Roots are polished with a couple of Newton steps on the original polynomial.
/// Throws std::invalid_argument on non-finite or all-zero coefficients.
std::vector<double> real_roots_cubic(const CubicCoefficients& c);

/// Largest real root > 0 of a2*x^2 + a1*x + a0, or nullopt if none exists.
/// Uses the cancellation-safe form (q = -(a1 + sign(a1)*sqrt(disc))/2, roots
/// q/a2 and a0/q). Throws std::invalid_argument when a2 == a1 == 0 or any
/// coefficient is non-finite.
std::optional<double> positive_root_quadratic(double a2, double a1, double a0);

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1},
/// by Michelot's finite active-set reduction. Throws on empty input.
std::vector<double> project_simplex(const std::vector<double>& v);

/// Euclidean projection onto {w >= 0, sum w = scale}; scale must be > 0.
std::vector<double> project_simplex_scaled(const std::vector<double>& v, double scale);

/// Elementwise max(v, 0): the projection onto the nonnegative orthant.
std::vector<double> project_nonneg(const std::vector<double>& v);

/// Projection onto {p >= 0, sum p <= cap}. Clamping negatives is enough when
/// the clamped point already fits the cap; otherwise the sum constraint is
/// active and the point lands on the scaled simplex face.
std::vector<double> project_capped_simplex(const std::vector<double>& v, double cap);

}  // namespace twrelay
