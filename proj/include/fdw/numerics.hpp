#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fdw {

std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double a, double b, std::size_t n);  // a, b > 0, endpoints included

/// Cubic spline with not-a-knot end conditions on strictly increasing knots.
/// Falls back to a parabola (3 knots) or a line (2 knots). Evaluation outside
/// the knot range extrapolates the end pieces.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  /// Exact integral of the piecewise cubic over [a, b] (a, b inside the knot range).
  double integral(double a, double b) const;

  std::size_t size() const { return x_.size(); }
  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t locate(double x) const;
  double primitive(std::size_t i, double x) const;  // integral from x_i to x on piece i

  std::vector<double> x_, y_;
  std::vector<double> b_, c_, d_;  // y_i + b (x-x_i) + c (x-x_i)^2 + d (x-x_i)^3
  std::vector<double> cumulative_;  // integral from x_0 to x_i
  bool uniform_ = false;
  double inv_step_ = 0.0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

/// Composite rule: `points` Gauss-Legendre nodes in each of `cells` equal cells of [a, b].
GaussRule composite_gauss(double a, double b, int cells, int points = 8);

/// Composite Gauss-Legendre over arbitrary increasing breakpoints.
GaussRule composite_gauss(std::span<const double> breaks, int points = 8);

/// Trapezoidal weights with fourth-order Gregory end corrections on a uniform
/// grid of n points and spacing step. Falls back to Simpson-type weights for
/// very short grids.
std::vector<double> gregory_weights(std::size_t n, double step);

/// First derivative on a uniform grid: fourth-order central differences inside,
/// fourth-order one-sided stencils at the two nodes nearest each end.
std::vector<double> differentiate_uniform(std::span<const double> values, double step);

}  // namespace fdw
