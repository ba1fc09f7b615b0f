#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fdw/mittag_leffler.hpp"
#include "fdw/numerics.hpp"
#include "fdw/sturm_liouville.hpp"

namespace fdw {

struct ModelParams {
  double alpha;
  Potential potential;
  RobinPair robin;

  void validate() const;
};

/// Measured values u(0, t_k) and u(1, t_k).
struct BoundaryTrace {
  std::vector<double> times;
  std::vector<double> left;
  std::vector<double> right;

  std::size_t size() const { return times.size(); }
  void validate() const;
};

/// Source term theta(t) g(x). g is sampled on the uniform x-grid of the
/// spectrum it is paired with; theta is sampled on [0, T] and interpolated by
/// a cubic spline.
struct SourceSpec {
  std::vector<double> g;
  std::vector<double> theta_times;
  std::vector<double> theta_values;

  static SourceSpec from_functions(const std::function<double(double)>& g, int cells,
                                   const std::function<double(double)>& theta, double t_end,
                                   int theta_samples = 2001);
  void validate() const;
};

/// u(x_i, t_k) stored row-major by time: values[k][i].
struct FieldSamples {
  std::vector<double> x;
  std::vector<double> t;
  std::vector<std::vector<double>> values;
  double truncation_estimate = 0.0;  // N times the sup of the last retained mode
};

/// Time grid on [t_min, t_end]; t_min defaults to 1e-4 t_end.
std::vector<double> default_time_grid(double t_end, std::size_t count, bool log_spaced = true,
                                      double t_min = 0.0);

FieldSamples solve_ivp(const ModelParams& params, const InitialData& data, const Spectrum& spec,
                       const ModeCoefficients& coeffs, std::span<const double> x_grid,
                       std::span<const double> t_grid);

BoundaryTrace boundary_trace(const ModelParams& params, const InitialData& data, const Spectrum& spec,
                             const ModeCoefficients& coeffs, std::span<const double> t_grid);

/// Trace from coefficients alone (phi_n(0) = 1, phi_n(1) from the spectrum).
BoundaryTrace trace_from_modes(double alpha, const Spectrum& spec, const ModeCoefficients& coeffs,
                               std::span<const double> t_grid);

/// N times the largest last-mode contribution to either trace over t_grid
/// (tail bound for coefficients decaying like n^-2).
double trace_truncation_estimate(double alpha, const Spectrum& spec, const ModeCoefficients& coeffs,
                                 std::span<const double> t_grid);

/// int_0^t theta(t-s) s^(alpha-1) E_{alpha,alpha}(-lambda s^alpha) ds.
class SourceConvolution {
 public:
  SourceConvolution(double alpha, const SourceSpec& source);
  double operator()(double lambda, double t) const;

 private:
  double alpha_;
  MittagLeffler e_aa_;
  CubicSpline theta_;
  GaussRule rule_;  // graded towards v = 0 on [0, 1]
};

BoundaryTrace solve_source(const ModelParams& params, const SourceSpec& source, const Spectrum& spec,
                           std::span<const double> t_grid);

/// Max over t_grid and both endpoints of |J^gamma u_source - theta * u|, where
/// gamma = 1 - alpha (alpha < 1), 0 (alpha = 1) or 2 - alpha (alpha > 1), and
/// u solves the initial-value problem with a = g (alpha <= 1) or a = 0, a0 = g
/// (alpha > 1). Both sides are evaluated by independent graded quadrature.
double duhamel_check(const ModelParams& params, const SourceSpec& source, const Spectrum& spec,
                     std::span<const double> t_grid);

/// Adds N(0, sigma^2) noise with sigma = level * rms(values), per endpoint.
BoundaryTrace add_noise(const BoundaryTrace& trace, double relative_level, std::mt19937_64& rng);

/// Gauss rule on [0, 1] with geometrically graded panels towards 0 (and 1 if
/// both_ends), `levels` halvings, `points` nodes per panel.
GaussRule graded_rule(int levels, int points, bool both_ends = false);

}  // namespace fdw
