#pragma once

#include <span>
#include <utility>

namespace lrfit
{

inline constexpr int kMaxDegree = 3;

/// Value, first and second derivative of a univariate B-spline.
struct BasisValue
{
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Evaluate the univariate B-spline defined by the local knot vector
/// `knots` (degree = knots.size() - 2) at x using the Cox-de Boor recursion.
///
/// The support is half-open, [knots.front(), knots.back()). With
/// `closed_right` set, x == knots.back() is treated as inside the support
/// (used where the last knot is the end of the parameter domain).
BasisValue bspline_basis(std::span<const double> knots, double x,
                         bool closed_right);

/// Value-only variant of bspline_basis().
double bspline_value(std::span<const double> knots, double x,
                     bool closed_right);

/// Coefficients of single-knot insertion. Inserting t strictly inside the
/// support of B[knots] gives B = alpha_first * B[first p+2 knots] +
/// alpha_second * B[last p+2 knots].
std::pair<double, double> knot_insertion_weights(std::span<const double> knots,
                                                 double t);

} // namespace lrfit
