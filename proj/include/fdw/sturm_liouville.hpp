#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fdw/numerics.hpp"

namespace fdw {

/// Nonnegative potential p on [0,1], sampled on a uniform grid of M+1 nodes
/// and interpolated by a not-a-knot cubic spline.
class Potential {
 public:
  /// Samples at x_i = i/M, i = 0..M. Requires M >= 8 and p >= 0 at every node.
  explicit Potential(std::vector<double> samples);

  static Potential zero(int intervals = 16);
  static Potential constant(double value, int intervals = 16);
  static Potential from_function(const std::function<double(double)>& f, int intervals);
  /// p(x) = sum_k c_k cos(k pi x).
  static Potential from_cosine(std::span<const double> coeffs, int intervals);

  double operator()(double x) const { return spline_(x); }
  double derivative(double x) const { return spline_.derivative(x); }
  /// Integral of p over [0, x].
  double integral(double x = 1.0) const { return spline_.integral(0.0, x); }

  int intervals() const { return static_cast<int>(samples_.size()) - 1; }
  const std::vector<double>& samples() const { return samples_; }
  std::vector<double> nodes() const;
  bool is_zero() const;

  bool operator==(const Potential& other) const { return samples_ == other.samples_; }

 private:
  std::vector<double> samples_;
  CubicSpline spline_;
};

/// Robin coefficients: phi'(0) = h phi(0), phi'(1) = -H phi(1).
struct RobinPair {
  double h;
  double H;
  void validate() const;
};

/// Value and derivative of the solution of -phi'' + p phi = lambda phi,
/// phi(0) = 1, phi'(0) = h.
struct ShootResult {
  double phi;
  double dphi;
};

ShootResult shoot(const Potential& p, double h, double lambda);

/// Samples of the same initial-value solution at increasing points in [0,1].
struct IvpSamples {
  std::vector<double> phi;
  std::vector<double> dphi;
};
IvpSamples sample_ivp(const Potential& p, double h, double lambda, std::span<const double> points);

/// W(lambda) = phi'(1) + H phi(1); zero exactly at eigenvalues.
double characteristic(const Potential& p, const RobinPair& robin, double lambda);

/// Number of eigenvalues <= lambda, from the Pruefer phase at x = 1.
int eigenvalue_count(const Potential& p, const RobinPair& robin, double lambda);

/// Eigensystem of A = -d^2/dx^2 + p with Robin conditions, phi_n(0) = 1.
/// Eigenfunctions are stored on a uniform grid of `cells` intervals and at the
/// nodes of the composite 8-point Gauss-Legendre rule on the same cells.
struct Spectrum {
  std::vector<double> lambdas;                // lambda_1 < lambda_2 < ...
  std::vector<std::vector<double>> phis;      // phis[n][i] = phi_n(x_i)
  std::vector<std::vector<double>> dphis;     // phi_n'(x_i)
  std::vector<std::vector<double>> phis_gauss;  // at quadrature nodes
  std::vector<double> rhos;                   // ||phi_n||^2
  std::vector<double> phi_end;                // phi_n(1)
  std::vector<double> dphi_end;               // phi_n'(1)
  double omega = 0.0;                         // h + H + 1/2 int p
  int cells = 0;
  GaussRule quadrature;

  std::size_t size() const { return lambdas.size(); }
  std::vector<double> grid() const;
};

struct EigenOptions {
  int cells = 0;  // eigenfunction grid; 0 picks max(64, potential intervals)
  double tolerance = 1e-10;
  bool values_only = false;  // eigenvalues and end values only, no eigenfunction samples
};

Spectrum eigensystem(const Potential& p, const RobinPair& robin, int count, EigenOptions options = {});

/// Initial data on a uniform grid of `cells` intervals (a0 present iff alpha > 1).
struct InitialData {
  std::vector<double> a;
  std::optional<std::vector<double>> a0;

  int cells() const { return static_cast<int>(a.size()) - 1; }
  static InitialData from_function(const std::function<double(double)>& a, int cells);
  static InitialData from_functions(const std::function<double(double)>& a,
                                    const std::function<double(double)>& a0, int cells);
  /// Linear combination sum_n c_n phi_n of computed eigenfunctions.
  static InitialData from_modes(const Spectrum& spec, std::span<const double> c);
};

/// f + c1 x (1-x)^2 + c2 x^2 (1-x) with c1, c2 chosen so the result satisfies
/// both Robin conditions. fp is the derivative of f.
std::function<double(double)> robin_compatible(std::function<double(double)> f,
                                               std::function<double(double)> fp, RobinPair robin);

/// Largest violation of the two Robin conditions by spline-interpolated samples.
double robin_defect(std::span<const double> samples, const RobinPair& robin);

struct ModeCoefficients {
  std::vector<double> pn;
  std::optional<std::vector<double>> pn0;

  std::size_t size() const { return pn.size(); }
};

/// p_n = (a, phi_n)/rho_n by the spectrum's quadrature rule.
ModeCoefficients mode_coefficients(const InitialData& data, const Spectrum& spec);

/// Inner product (f, phi_n) of grid samples with the n-th (0-based) eigenfunction.
double inner_product(std::span<const double> samples, const Spectrum& spec, std::size_t n);

/// Indices n (1-based, n <= count) where |p_n| + |p_n^0| < tol.
std::vector<int> assumption_check(const ModeCoefficients& coeffs, int count, double tol);

}  // namespace fdw
