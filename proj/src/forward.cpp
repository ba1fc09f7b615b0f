#include "fdw/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdw/errors.hpp"

namespace fdw {

namespace {

void check_time_grid(std::span<const double> t) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(t[k] > 0.0) || !std::isfinite(t[k])) throw UsageError("time grid must lie in (0, T]");
    if (k > 0 && !(t[k] > t[k - 1])) throw UsageError("time grid must be strictly increasing");
  }
}

void check_coefficients(double alpha, const Spectrum& spec, const ModeCoefficients& coeffs) {
  if (coeffs.size() > spec.size()) throw UsageError("more mode coefficients than computed eigenpairs");
  if (alpha > 1.0 && !coeffs.pn0) throw UsageError("alpha > 1 requires the second initial datum a0");
}

// Cubic Hermite interpolation of an eigenfunction from grid values and slopes.
double hermite(const Spectrum& spec, std::size_t n, double x) {
  const double step = 1.0 / spec.cells;
  auto i = static_cast<std::size_t>(std::clamp(x / step, 0.0, static_cast<double>(spec.cells - 1)));
  const double t = (x - i * step) / step;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * spec.phis[n][i] + h10 * step * spec.dphis[n][i] + h01 * spec.phis[n][i + 1] +
         h11 * step * spec.dphis[n][i + 1];
}

}  // namespace

void ModelParams::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0,2), got " << alpha;
    throw DomainError(os.str());
  }
  robin.validate();
}

void BoundaryTrace::validate() const {
  if (left.size() != times.size() || right.size() != times.size()) {
    throw UsageError("trace arrays must share one length");
  }
  check_time_grid(times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(left[k]) || !std::isfinite(right[k])) throw UsageError("trace values must be finite");
  }
}

SourceSpec SourceSpec::from_functions(const std::function<double(double)>& g, int cells,
                                      const std::function<double(double)>& theta, double t_end,
                                      int theta_samples) {
  SourceSpec s;
  for (double x : linspace(0.0, 1.0, static_cast<std::size_t>(cells) + 1)) s.g.push_back(g(x));
  s.theta_times = linspace(0.0, t_end, static_cast<std::size_t>(theta_samples));
  for (double t : s.theta_times) s.theta_values.push_back(theta(t));
  return s;
}

void SourceSpec::validate() const {
  if (theta_times.size() < 4 || theta_times.size() != theta_values.size()) {
    throw UsageError("theta needs at least four samples with matching times");
  }
  if (theta_times.front() != 0.0) throw UsageError("theta samples must start at t = 0");
  if (std::all_of(theta_values.begin(), theta_values.end(), [](double v) { return v == 0.0; })) {
    throw UsageError("theta must not vanish identically");
  }
}

std::vector<double> default_time_grid(double t_end, std::size_t count, bool log_spaced, double t_min) {
  if (!(t_end > 0.0)) throw UsageError("time window end must be positive");
  const double lo = t_min > 0.0 ? t_min : 1e-4 * t_end;
  return log_spaced ? logspace(lo, t_end, count) : linspace(lo, t_end, count);
}

GaussRule graded_rule(int levels, int points, bool both_ends) {
  std::vector<double> breaks;
  if (both_ends) {
    breaks.push_back(0.0);
    for (int k = levels; k >= 2; --k) breaks.push_back(std::ldexp(1.0, -k));
    breaks.push_back(0.5);
    for (int k = 2; k <= levels; ++k) breaks.push_back(1.0 - std::ldexp(1.0, -k));
    breaks.push_back(1.0);
  } else {
    breaks.push_back(0.0);
    for (int k = levels; k >= 1; --k) breaks.push_back(std::ldexp(1.0, -k));
    breaks.push_back(1.0);
  }
  return composite_gauss(std::span<const double>(breaks), points);
}

FieldSamples solve_ivp(const ModelParams& params, const InitialData& data, const Spectrum& spec,
                       const ModeCoefficients& coeffs, std::span<const double> x_grid,
                       std::span<const double> t_grid) {
  params.validate();
  if (params.alpha > 1.0 && !data.a0) throw UsageError("alpha > 1 requires the second initial datum a0");
  check_coefficients(params.alpha, spec, coeffs);
  check_time_grid(t_grid);
  const std::size_t modes = coeffs.size();
  std::vector<std::vector<double>> phi(modes, std::vector<double>(x_grid.size()));
  for (std::size_t n = 0; n < modes; ++n) {
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      if (x_grid[i] < 0.0 || x_grid[i] > 1.0) throw UsageError("x grid must lie in [0,1]");
      phi[n][i] = hermite(spec, n, x_grid[i]);
    }
  }
  const TimeKernels kernels(params.alpha);
  const bool wave = params.alpha > 1.0;
  FieldSamples out;
  out.x.assign(x_grid.begin(), x_grid.end());
  out.t.assign(t_grid.begin(), t_grid.end());
  out.values.assign(t_grid.size(), std::vector<double>(x_grid.size(), 0.0));
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    for (std::size_t n = 0; n < modes; ++n) {
      double amp = coeffs.pn[n] * kernels.e1(spec.lambdas[n], t_grid[k]);
      if (wave) amp += (*coeffs.pn0)[n] * kernels.e2t(spec.lambdas[n], t_grid[k]);
      if (amp == 0.0) continue;
      for (std::size_t i = 0; i < x_grid.size(); ++i) out.values[k][i] += amp * phi[n][i];
      if (n + 1 == modes) {
        double sup = 0.0;
        for (double v : spec.phis[n]) sup = std::max(sup, std::abs(v));
        out.truncation_estimate = std::max(out.truncation_estimate, std::abs(amp) * sup * static_cast<double>(modes));
      }
    }
  }
  return out;
}

BoundaryTrace trace_from_modes(double alpha, const Spectrum& spec, const ModeCoefficients& coeffs,
                               std::span<const double> t_grid) {
  check_coefficients(alpha, spec, coeffs);
  check_time_grid(t_grid);
  const TimeKernels kernels(alpha);
  const bool wave = alpha > 1.0;
  BoundaryTrace tr;
  tr.times.assign(t_grid.begin(), t_grid.end());
  tr.left.assign(t_grid.size(), 0.0);
  tr.right.assign(t_grid.size(), 0.0);
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    const double a = coeffs.pn[n];
    const double b = wave ? (*coeffs.pn0)[n] : 0.0;
    if (a == 0.0 && b == 0.0) continue;
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      double amp = a == 0.0 ? 0.0 : a * kernels.e1(spec.lambdas[n], t_grid[k]);
      if (b != 0.0) amp += b * kernels.e2t(spec.lambdas[n], t_grid[k]);
      tr.left[k] += amp;
      tr.right[k] += amp * spec.phi_end[n];
    }
  }
  return tr;
}

double trace_truncation_estimate(double alpha, const Spectrum& spec, const ModeCoefficients& coeffs,
                                 std::span<const double> t_grid) {
  if (coeffs.size() == 0) return 0.0;
  ModeCoefficients last;
  last.pn.assign(coeffs.size(), 0.0);
  last.pn.back() = coeffs.pn.back();
  if (coeffs.pn0) {
    last.pn0 = std::vector<double>(coeffs.size(), 0.0);
    last.pn0->back() = coeffs.pn0->back();
  }
  const BoundaryTrace tail = trace_from_modes(alpha, spec, last, t_grid);
  double sup = 0.0;
  for (std::size_t k = 0; k < tail.size(); ++k) sup = std::max({sup, std::abs(tail.left[k]), std::abs(tail.right[k])});
  // with coefficients decaying like n^-2 the discarded tail sums to about N times the last term
  return sup * static_cast<double>(coeffs.size());
}

BoundaryTrace boundary_trace(const ModelParams& params, const InitialData& data, const Spectrum& spec,
                             const ModeCoefficients& coeffs, std::span<const double> t_grid) {
  params.validate();
  if (params.alpha > 1.0 && !data.a0) throw UsageError("alpha > 1 requires the second initial datum a0");
  return trace_from_modes(params.alpha, spec, coeffs, t_grid);
}

SourceConvolution::SourceConvolution(double alpha, const SourceSpec& source)
    : alpha_(alpha),
      e_aa_(alpha, alpha),
      theta_(source.theta_times, source.theta_values),
      rule_(graded_rule(40, 10)) {
  source.validate();
}

double SourceConvolution::operator()(double lambda, double t) const {
  if (t <= 0.0) return 0.0;
  // s = t v^(1/alpha) removes the s^(alpha-1) singularity: ds s^(alpha-1) = t^alpha/alpha dv
  const double ta = std::pow(t, alpha_);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule_.nodes.size(); ++k) {
    const double v = rule_.nodes[k];
    sum += rule_.weights[k] * theta_(t - t * std::pow(v, 1.0 / alpha_)) * e_aa_(-lambda * ta * v);
  }
  return ta / alpha_ * sum;
}

BoundaryTrace solve_source(const ModelParams& params, const SourceSpec& source, const Spectrum& spec,
                           std::span<const double> t_grid) {
  params.validate();
  source.validate();
  check_time_grid(t_grid);
  if (!t_grid.empty() && t_grid.back() > source.theta_times.back() * (1 + 1e-12)) {
    throw UsageError("theta samples do not cover the time grid");
  }
  const SourceConvolution conv(params.alpha, source);
  BoundaryTrace tr;
  tr.times.assign(t_grid.begin(), t_grid.end());
  tr.left.assign(t_grid.size(), 0.0);
  tr.right.assign(t_grid.size(), 0.0);
  for (std::size_t n = 0; n < spec.size(); ++n) {
    const double gn = inner_product(source.g, spec, n) / spec.rhos[n];
    if (gn == 0.0) continue;
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      const double v = gn * conv(spec.lambdas[n], t_grid[k]);
      tr.left[k] += v;
      tr.right[k] += v * spec.phi_end[n];
    }
  }
  return tr;
}

double duhamel_check(const ModelParams& params, const SourceSpec& source, const Spectrum& spec,
                     std::span<const double> t_grid) {
  params.validate();
  source.validate();
  check_time_grid(t_grid);
  const double alpha = params.alpha;
  std::vector<double> gn(spec.size());
  bool all_zero = true;
  for (std::size_t n = 0; n < spec.size(); ++n) {
    gn[n] = inner_product(source.g, spec, n) / spec.rhos[n];
    if (gn[n] != 0.0) all_zero = false;
  }
  if (all_zero) return 0.0;

  const SourceConvolution conv(alpha, source);
  const TimeKernels kernels(alpha);
  const CubicSpline theta(source.theta_times, source.theta_values);
  const GaussRule outer = graded_rule(30, 8, true);
  const GaussRule conv_rule = graded_rule(30, 8);

  // source-problem trace and initial-value trace, both endpoints at once
  auto u_source = [&](double s, double& left, double& right) {
    left = right = 0.0;
    for (std::size_t n = 0; n < gn.size(); ++n) {
      if (gn[n] == 0.0) continue;
      const double v = gn[n] * conv(spec.lambdas[n], s);
      left += v;
      right += v * spec.phi_end[n];
    }
  };
  auto u_ivp = [&](double s, double& left, double& right) {
    left = right = 0.0;
    for (std::size_t n = 0; n < gn.size(); ++n) {
      if (gn[n] == 0.0) continue;
      const double v = gn[n] * (alpha > 1.0 ? kernels.e2t(spec.lambdas[n], s) : kernels.e1(spec.lambdas[n], s));
      left += v;
      right += v * spec.phi_end[n];
    }
  };

  const double gamma = alpha < 1.0 ? 1.0 - alpha : (alpha > 1.0 ? 2.0 - alpha : 0.0);
  double worst = 0.0;
  for (double t : t_grid) {
    double lhs_l = 0.0, lhs_r = 0.0;
    if (gamma == 0.0) {
      u_source(t, lhs_l, lhs_r);
    } else {
      double acc_l = 0.0, acc_r = 0.0;
      for (std::size_t k = 0; k < outer.nodes.size(); ++k) {
        double l, r;
        u_source(t * (1.0 - std::pow(outer.nodes[k], 1.0 / gamma)), l, r);
        acc_l += outer.weights[k] * l;
        acc_r += outer.weights[k] * r;
      }
      const double scale = std::pow(t, gamma) * rgamma(gamma + 1.0);
      lhs_l = scale * acc_l;
      lhs_r = scale * acc_r;
    }
    double rhs_l = 0.0, rhs_r = 0.0;
    for (std::size_t k = 0; k < conv_rule.nodes.size(); ++k) {
      const double s = t * conv_rule.nodes[k];
      double l, r;
      u_ivp(s, l, r);
      const double w = conv_rule.weights[k] * theta(t - s);
      rhs_l += w * l;
      rhs_r += w * r;
    }
    rhs_l *= t;
    rhs_r *= t;
    worst = std::max({worst, std::abs(lhs_l - rhs_l), std::abs(lhs_r - rhs_r)});
  }
  return worst;
}

BoundaryTrace add_noise(const BoundaryTrace& trace, double relative_level, std::mt19937_64& rng) {
  BoundaryTrace out = trace;
  if (relative_level <= 0.0) return out;
  auto rms = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return v.empty() ? 0.0 : std::sqrt(s / v.size());
  };
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sl = relative_level * rms(trace.left);
  const double sr = relative_level * rms(trace.right);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.left[k] += sl * normal(rng);
    out.right[k] += sr * normal(rng);
  }
  return out;
}

}  // namespace fdw
