#include "fdw/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "fdw/errors.hpp"

namespace fdw {

namespace {

constexpr int kMaxModes = 8;

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct TraceData {
  std::vector<double> t;
  MatrixXd y;  // one column per endpoint
  double norm = 0.0;
};

TraceData collect(const BoundaryTrace& trace, FitEndpoints endpoints) {
  trace.validate();
  TraceData d;
  d.t = trace.times;
  const int n = static_cast<int>(trace.size());
  const int cols = endpoints == FitEndpoints::both ? 2 : 1;
  d.y.resize(n, cols);
  for (int k = 0; k < n; ++k) {
    d.y(k, 0) = trace.left[k];
    if (cols == 2) d.y(k, 1) = trace.right[k];
  }
  d.norm = d.y.norm();
  return d;
}

// Columns E_{a,1}(-lambda t^a) and, for a > 1, t E_{a,2}(-lambda t^a), with
// their derivatives in log lambda:
//   lambda d/dlambda E_{a,1}(z)   = z E_{a,a}(z) / a
//   lambda d/dlambda t E_{a,2}(z) = t (E_{a,1}(z) - E_{a,2}(z)) / a.
class ModeBasis {
 public:
  ModeBasis(double alpha, std::span<const double> t)
      : alpha_(alpha), velocity_(alpha > 1.0), t_(t.begin(), t.end()), e1_(alpha, 1.0), eaa_(alpha, alpha),
        e2_(alpha, 2.0) {
    ta_.reserve(t_.size());
    for (double v : t_) ta_.push_back(std::pow(v, alpha));
  }

  int per_mode() const { return velocity_ ? 2 : 1; }
  int rows() const { return static_cast<int>(t_.size()); }
  bool velocity() const { return velocity_; }

  void values(double lambda, MatrixXd& out, int col) const {
    for (int k = 0; k < rows(); ++k) {
      const double z = -lambda * ta_[k];
      out(k, col) = e1_(z);
      if (velocity_) out(k, col + 1) = t_[k] * e2_(z);
    }
  }

  void with_derivatives(double lambda, MatrixXd& val, MatrixXd& der, int col) const {
    for (int k = 0; k < rows(); ++k) {
      const double z = -lambda * ta_[k];
      const double e1 = e1_(z);
      val(k, col) = e1;
      der(k, col) = z * eaa_(z) / alpha_;
      if (velocity_) {
        const double e2 = e2_(z);
        val(k, col + 1) = t_[k] * e2;
        der(k, col + 1) = t_[k] * (e1 - e2) / alpha_;
      }
    }
  }

 private:
  double alpha_;
  bool velocity_;
  std::vector<double> t_, ta_;
  MittagLeffler e1_, eaa_, e2_;
};

struct Projection {
  MatrixXd coef;
  MatrixXd resid;
  double norm = 0.0;
  double condition = 0.0;
};

Projection project(const MatrixXd& phi, const MatrixXd& y) {
  Projection p;
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(phi);
  p.coef = qr.solve(y);
  p.resid = y - phi * p.coef;
  p.norm = p.resid.norm();
  const auto r = qr.matrixR().diagonal().cwiseAbs();
  p.condition = r.minCoeff() > 0.0 ? r.maxCoeff() / r.minCoeff() : std::numeric_limits<double>::infinity();
  return p;
}

// Variable-projection residual in log lambda with the Kaufman Jacobian.
struct VpFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;

  const ModeBasis* basis;
  const TraceData* data;
  int modes;
  double log_lo, log_hi;  // box for log lambda; the residual is flat outside

  double lambda(double x) const { return std::exp(std::isnan(x) ? log_hi : std::clamp(x, log_lo, log_hi)); }

  int inputs() const { return modes; }
  int values() const { return static_cast<int>(data->y.size()); }

  MatrixXd matrix(const VectorXd& x) const {
    MatrixXd phi(basis->rows(), modes * basis->per_mode());
    for (int m = 0; m < modes; ++m) basis->values(lambda(x[m]), phi, m * basis->per_mode());
    return phi;
  }

  int operator()(const VectorXd& x, VectorXd& f) const {
    const Projection p = project(matrix(x), data->y);
    f = Eigen::Map<const VectorXd>(p.resid.data(), p.resid.size()) / data->norm;
    return 0;
  }

  int df(const VectorXd& x, MatrixXd& jac) const {
    const int pm = basis->per_mode();
    MatrixXd phi(basis->rows(), modes * pm), der(basis->rows(), modes * pm);
    for (int m = 0; m < modes; ++m) basis->with_derivatives(lambda(x[m]), phi, der, m * pm);
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(phi);
    const MatrixXd coef = qr.solve(data->y);
    const auto rank = qr.rank();
    const int n = basis->rows();
    jac.resize(values(), modes);
    for (int m = 0; m < modes; ++m) {
      if (x[m] <= log_lo || x[m] >= log_hi) {
        jac.col(m).setZero();
        continue;
      }
      for (int c = 0; c < data->y.cols(); ++c) {
        VectorXd v = der.middleCols(m * pm, pm) * coef.block(m * pm, c, pm, 1);
        VectorXd w = qr.householderQ().transpose() * v;
        w.head(rank).setZero();
        jac.block(c * n, m, n, 1) = -(qr.householderQ() * w) / data->norm;
      }
    }
    return 0;
  }
};

std::vector<double> run_lm(const ModeBasis& basis, const TraceData& data, std::vector<double> lambdas,
                           const FitOptions& opt, int evaluations_per_mode = 200) {
  VpFunctor f{&basis, &data, static_cast<int>(lambdas.size()), std::log(1e-2 * opt.lambda_min),
              std::log(1e2 * opt.lambda_max)};
  VectorXd x(f.modes);
  for (int m = 0; m < f.modes; ++m) x[m] = std::log(lambdas[m]);
  Eigen::LevenbergMarquardt<VpFunctor> lm(f);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.maxfev = evaluations_per_mode * (f.modes + 1);
  lm.minimize(x);
  for (int m = 0; m < f.modes; ++m) lambdas[m] = std::isfinite(x[m]) ? f.lambda(x[m]) : lambdas[m];
  return lambdas;
}

double vp_norm(const ModeBasis& basis, const TraceData& data, std::span<const double> lambdas) {
  const int pm = basis.per_mode();
  MatrixXd phi(basis.rows(), static_cast<int>(lambdas.size()) * pm);
  for (std::size_t m = 0; m < lambdas.size(); ++m) basis.values(lambdas[m], phi, static_cast<int>(m) * pm);
  return project(phi, data.y).norm;
}

// Dictionary of scan columns for greedy mode selection.
class ScanDictionary {
 public:
  ScanDictionary(const ModeBasis& basis, const FitOptions& opt)
      : lambdas_(logspace(opt.lambda_min, opt.lambda_max, static_cast<std::size_t>(opt.lambda_scan))) {
    cols_.assign(lambdas_.size(), MatrixXd(basis.rows(), basis.per_mode()));
    for (std::size_t s = 0; s < lambdas_.size(); ++s) basis.values(lambdas_[s], cols_[s], 0);
  }

  // Scan eigenvalue that most reduces the residual when added to `lambdas`.
  double best_addition(const ModeBasis& basis, const TraceData& data, std::span<const double> lambdas) const {
    const int pm = basis.per_mode();
    const int k = static_cast<int>(lambdas.size());
    MatrixXd phi(basis.rows(), (k + 1) * pm);
    for (int m = 0; m < k; ++m) basis.values(lambdas[m], phi, m * pm);
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t s = 0; s < lambdas_.size(); ++s) {
      phi.rightCols(pm) = cols_[s];
      const double r = project(phi, data.y).norm;
      if (r < best) {
        best = r;
        pick = s;
      }
    }
    return lambdas_[pick];
  }

 private:
  std::vector<double> lambdas_;
  std::vector<MatrixXd> cols_;
};

// Starting sets for the eigenvalues at a fixed order: matching pursuit on the
// scan dictionary, greedy addition with refits, and a log-uniform spread over
// the band lambda t^alpha ~ 1 resolved by the time window. Each is refined by
// Levenberg-Marquardt and the best kept; a swap pass (drop one mode, refit,
// re-add the best scan mode) then escapes coalesced pairs.
std::vector<double> initial_lambdas(const ModeBasis& basis, const TraceData& data, double alpha,
                                    const FitOptions& opt, std::span<const double> warm, bool thorough) {
  const ScanDictionary dict(basis, opt);
  std::vector<std::vector<double>> candidates;

  std::vector<double> pursuit;
  for (int k = 0; k < opt.modes; ++k) pursuit.push_back(dict.best_addition(basis, data, pursuit));
  const int budget = thorough ? 200 : 40;
  candidates.push_back(run_lm(basis, data, pursuit, opt, budget));

  if (thorough) {
    std::vector<double> greedy;
    for (int k = 0; k < opt.modes; ++k) {
      greedy.push_back(dict.best_addition(basis, data, greedy));
      greedy = run_lm(basis, data, greedy, opt);
    }
    candidates.push_back(greedy);
  }

  const double lo = std::clamp(0.5 * std::pow(data.t.back(), -alpha), opt.lambda_min, opt.lambda_max);
  const double hi = std::clamp(2.0 * std::pow(data.t.front(), -alpha), opt.lambda_min, opt.lambda_max);
  std::vector<double> spread = opt.modes == 1 ? std::vector<double>{std::sqrt(lo * hi)}
                                              : logspace(lo, hi, static_cast<std::size_t>(opt.modes));
  if (thorough) candidates.push_back(run_lm(basis, data, spread, opt));

  // Sturm-Liouville shaped starts sqrt(lambda_n - s) = theta + (n-1) pi,
  // ranked by their unrefined residual; the best few are refined.
  std::vector<std::pair<double, std::vector<double>>> shaped;
  for (double theta : linspace(0.2, std::numbers::pi, 15)) {
    for (double shift : {0.0, 1.0, 3.0, 10.0}) {
      std::vector<double> l;
      for (int n = 0; n < opt.modes; ++n) {
        const double mu = theta + n * std::numbers::pi;
        l.push_back(std::clamp(mu * mu + shift, opt.lambda_min, opt.lambda_max));
      }
      shaped.emplace_back(vp_norm(basis, data, l), std::move(l));
    }
  }
  std::sort(shaped.begin(), shaped.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 0; k < std::min<std::size_t>(thorough ? 4 : 2, shaped.size()); ++k) {
    candidates.push_back(run_lm(basis, data, shaped[k].second, opt, budget));
  }

  if (static_cast<int>(warm.size()) == opt.modes) candidates.push_back(run_lm(basis, data, {warm.begin(), warm.end()}, opt, budget));

  std::vector<double> best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (auto& c : candidates) {
    const double r = vp_norm(basis, data, c);
    if (r < best_norm) {
      best_norm = r;
      best = std::move(c);
    }
  }
  if (thorough && opt.modes > 1 && best_norm > 1e-10 * data.norm) {
    for (int m = 0; m < opt.modes; ++m) {
      std::vector<double> trial = best;
      trial.erase(trial.begin() + m);
      trial = run_lm(basis, data, trial, opt);
      trial.push_back(dict.best_addition(basis, data, trial));
      trial = run_lm(basis, data, trial, opt);
      const double r = vp_norm(basis, data, trial);
      if (r < best_norm) {
        best_norm = r;
        best = std::move(trial);
      }
    }
  }
  return best;
}

SpectralFingerprint make_fingerprint(const ModeBasis& basis, const TraceData& data, double alpha,
                                     std::vector<double> lambdas, const FitOptions& opt) {
  std::sort(lambdas.begin(), lambdas.end());
  const int pm = basis.per_mode();
  const int modes = static_cast<int>(lambdas.size());
  MatrixXd phi(basis.rows(), modes * pm);
  for (int m = 0; m < modes; ++m) basis.values(lambdas[m], phi, m * pm);
  const Projection p = project(phi, data.y);
  SpectralFingerprint fp;
  fp.alpha = alpha;
  fp.lambdas = lambdas;
  auto amplitudes = [&](int c, int offset) {
    std::vector<double> v(modes);
    for (int m = 0; m < modes; ++m) v[m] = p.coef(m * pm + offset, c);
    return v;
  };
  fp.pn = amplitudes(0, 0);
  if (pm == 2) fp.pn0 = amplitudes(0, 1);
  if (data.y.cols() == 2) {
    fp.right_pn = amplitudes(1, 0);
    if (pm == 2) fp.right_pn0 = amplitudes(1, 1);
  }
  fp.residual = p.norm;
  fp.relative_residual = data.norm > 0.0 ? p.norm / data.norm : 0.0;
  fp.condition = p.condition;
  fp.ill_conditioned = !(p.condition < opt.condition_limit);
  return fp;
}

void check_options(const FitOptions& opt) {
  if (opt.modes < 1 || opt.modes > kMaxModes) {
    std::ostringstream os;
    os << "number of fitted modes must lie in 1.." << kMaxModes << " (got " << opt.modes << ")";
    throw UsageError(os.str());
  }
  if (!(opt.alpha_lo > 0.0) || !(opt.alpha_hi < 2.0) || !(opt.alpha_lo <= opt.alpha_hi) || !(opt.alpha_step > 0.0)) {
    throw UsageError("alpha bounds must satisfy 0 < lo <= hi < 2 with a positive step");
  }
  if (!(opt.lambda_min > 0.0) || !(opt.lambda_max > opt.lambda_min) || opt.lambda_scan < 2) {
    throw UsageError("eigenvalue scan needs 0 < lambda_min < lambda_max and at least two points");
  }
}

SpectralFingerprint best_at_order(const TraceData& data, double alpha, const FitOptions& opt,
                                  std::span<const double> warm, bool thorough = true) {
  const ModeBasis basis(alpha, data.t);
  const std::vector<double> lambdas = initial_lambdas(basis, data, alpha, opt, warm, thorough);
  return make_fingerprint(basis, data, alpha, lambdas, opt);
}

std::vector<double> alpha_grid(const FitOptions& opt) {
  std::vector<double> g;
  const int steps = static_cast<int>(std::floor((opt.alpha_hi - opt.alpha_lo) / opt.alpha_step + 1e-9));
  for (int k = 0; k <= steps; ++k) g.push_back(opt.alpha_lo + k * opt.alpha_step);
  return g;
}

void flag(SpectralFingerprint& fp, const FitOptions& opt) {
  std::ostringstream os;
  if (fp.relative_residual > opt.failure_threshold) {
    fp.failed = true;
    os << "relative residual " << fp.relative_residual << " exceeds " << opt.failure_threshold;
  }
  if (fp.ill_conditioned) {
    if (!os.str().empty()) os << "; ";
    os << "amplitude matrix ill-conditioned (condition " << fp.condition << "), eigenvalues nearly coincide";
  }
  fp.diagnostic = os.str();
}

SpectralFingerprint vanishing_fit(const TraceData& data, const FitOptions& opt) {
  SpectralFingerprint fp;
  fp.alpha = std::numeric_limits<double>::quiet_NaN();
  fp.lambdas.assign(opt.modes, std::numeric_limits<double>::quiet_NaN());
  fp.pn.assign(opt.modes, 0.0);
  if (data.y.cols() == 2) fp.right_pn.assign(opt.modes, 0.0);
  fp.failed = true;
  fp.diagnostic = "trace vanishes identically: no eigenmode is excited, order and eigenvalues are undetermined";
  return fp;
}

}  // namespace

SpectralFingerprint fit_modes_at_order(const BoundaryTrace& trace, double alpha, const FitOptions& options,
                                       std::span<const double> start) {
  check_options(options);
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  const TraceData data = collect(trace, options.endpoints);
  if (data.norm == 0.0) return vanishing_fit(data, options);
  const ModeBasis basis(alpha, data.t);
  std::vector<double> lambdas;
  if (start.empty()) {
    lambdas = initial_lambdas(basis, data, alpha, options, {}, true);
  } else {
    if (static_cast<int>(start.size()) != options.modes) throw UsageError("start eigenvalues must match the mode count");
    lambdas = run_lm(basis, data, {start.begin(), start.end()}, options);
  }
  SpectralFingerprint fp = make_fingerprint(basis, data, alpha, lambdas, options);
  flag(fp, options);
  return fp;
}

std::vector<double> order_profile(const BoundaryTrace& trace, std::span<const double> betas,
                                  const FitOptions& options) {
  check_options(options);
  const TraceData data = collect(trace, options.endpoints);
  std::vector<double> out;
  std::vector<double> warm;
  for (double beta : betas) {
    if (data.norm == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const SpectralFingerprint fp = best_at_order(data, beta, options, warm);
    warm = fp.lambdas;
    out.push_back(fp.relative_residual);
  }
  return out;
}

namespace {

struct OrderSearch {
  std::vector<double> grid;
  std::vector<double> residual;
  double alpha = 0.0;
  std::vector<double> lambdas;
  double best = std::numeric_limits<double>::infinity();
};

// Profiled residual over the order: a coarse fit at every grid order (warm
// started along the grid), thorough fits at the three best grid orders, and
// Brent refinement around the winner. `data_at` supplies the data to be fitted
// at a trial order.
template <class DataAt>
OrderSearch search_order(DataAt&& data_at, const FitOptions& opt) {
  OrderSearch s;
  s.grid = alpha_grid(opt);
  std::vector<std::vector<double>> lambdas;
  std::vector<double> warm;
  for (double a : s.grid) {
    const SpectralFingerprint fp = best_at_order(data_at(a), a, opt, warm, false);
    warm = fp.lambdas;
    s.residual.push_back(fp.relative_residual);
    lambdas.push_back(fp.lambdas);
  }
  std::vector<std::size_t> order(s.grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return s.residual[i] < s.residual[j]; });
  for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) {
    const std::size_t i = order[k];
    const SpectralFingerprint fp = best_at_order(data_at(s.grid[i]), s.grid[i], opt, lambdas[i], true);
    if (fp.relative_residual < s.residual[i]) {
      s.residual[i] = fp.relative_residual;
      lambdas[i] = fp.lambdas;
    }
  }
  const auto b = static_cast<std::size_t>(std::min_element(s.residual.begin(), s.residual.end()) - s.residual.begin());
  s.alpha = s.grid[b];
  s.lambdas = lambdas[b];
  s.best = s.residual[b];
  auto profile = [&](double a) {
    const TraceData& data = data_at(a);
    if (data.norm == 0.0) return std::numeric_limits<double>::infinity();
    const ModeBasis basis(a, data.t);
    const std::vector<double> l = run_lm(basis, data, s.lambdas, opt);
    const double r = vp_norm(basis, data, l) / data.norm;
    if (r < s.best) {
      s.best = r;
      s.alpha = a;
      s.lambdas = l;
    }
    return r;
  };
  const double lo = std::max(opt.alpha_lo, s.grid[b] - opt.alpha_step);
  const double hi = std::min(opt.alpha_hi, s.grid[b] + opt.alpha_step);
  if (hi > lo) {
    std::uintmax_t iters = 80;
    boost::math::tools::brent_find_minima(profile, lo, hi, 40, iters);
  }
  return s;
}

}  // namespace

SpectralFingerprint fit_order_and_modes(const BoundaryTrace& trace, const FitOptions& options) {
  check_options(options);
  const TraceData data = collect(trace, options.endpoints);
  if (data.norm == 0.0) return vanishing_fit(data, options);
  const OrderSearch s = search_order([&](double) -> const TraceData& { return data; }, options);
  const ModeBasis basis(s.alpha, data.t);
  SpectralFingerprint fp = make_fingerprint(basis, data, s.alpha, s.lambdas, options);
  fp.scan_alpha = s.grid;
  fp.scan_residual = s.residual;
  flag(fp, options);
  return fp;
}

BoundaryTrace synthesize(const SpectralFingerprint& fp, std::span<const double> times) {
  BoundaryTrace out;
  out.times.assign(times.begin(), times.end());
  out.left.assign(times.size(), 0.0);
  out.right.assign(times.size(), 0.0);
  if (fp.lambdas.empty() || !std::isfinite(fp.alpha)) return out;
  const ModeBasis basis(fp.alpha, times);
  const int pm = basis.per_mode();
  MatrixXd col(basis.rows(), pm);
  for (std::size_t m = 0; m < fp.size(); ++m) {
    basis.values(fp.lambdas[m], col, 0);
    for (int k = 0; k < basis.rows(); ++k) {
      out.left[k] += fp.pn[m] * col(k, 0) + (pm == 2 ? (*fp.pn0)[m] * col(k, 1) : 0.0);
      if (!fp.right_pn.empty()) {
        out.right[k] += fp.right_pn[m] * col(k, 0) + (pm == 2 ? (*fp.right_pn0)[m] * col(k, 1) : 0.0);
      }
    }
  }
  return out;
}

LaplaceSamples laplace_trace(const BoundaryTrace& trace, double alpha, std::span<const double> xi_grid,
                             const SpectralFingerprint* tail_model, bool right_endpoint) {
  trace.validate();
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  if (trace.size() < 4) throw UsageError("laplace_trace needs at least four samples");
  const auto& u = right_endpoint ? trace.right : trace.left;
  LaplaceSamples out;
  out.xi.assign(xi_grid.begin(), xi_grid.end());
  const double t0 = trace.times.front(), t1 = trace.times.back();
  double peak = 0.0;
  for (double v : u) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) {
    out.values.assign(xi_grid.size(), 0.0);
    return out;
  }
  const CubicSpline spline(trace.times, u);
  const GaussRule window = composite_gauss(trace.times, 8);
  std::vector<double> window_u;
  for (double t : window.nodes) window_u.push_back(spline(t));

  auto model = [&](std::span<const double> ts) {
    const BoundaryTrace s = synthesize(*tail_model, ts);
    return right_endpoint ? s.right : s.left;
  };
  GaussRule head;
  std::vector<double> head_u;
  if (tail_model != nullptr) {
    std::vector<double> breaks{0.0};
    for (int k = 40; k >= 0; --k) breaks.push_back(t0 * std::ldexp(1.0, -k));
    head = composite_gauss(breaks, 8);
    head_u = model(head.nodes);
  } else if (std::abs(u.back()) > 1e-6 * peak) {
    out.tail_bias_warning = true;
  }

  for (double xi : xi_grid) {
    if (!(xi > 0.0)) throw DomainError("laplace_trace: xi must be positive");
    const double z = std::pow(xi, 1.0 / alpha);
    double sum = 0.0;
    for (std::size_t k = 0; k < window.nodes.size(); ++k) sum += window.weights[k] * std::exp(-z * window.nodes[k]) * window_u[k];
    if (tail_model != nullptr) {
      for (std::size_t k = 0; k < head.nodes.size(); ++k) sum += head.weights[k] * std::exp(-z * head.nodes[k]) * head_u[k];
      const double span = 60.0 / z;
      const int cells = std::clamp(static_cast<int>(span / (0.05 * std::max(t1, 1.0))) + 1, 50, 4000);
      const GaussRule tail = composite_gauss(t1, t1 + span, cells, 8);
      const auto tail_u = model(tail.nodes);
      for (std::size_t k = 0; k < tail.nodes.size(); ++k) sum += tail.weights[k] * std::exp(-z * tail.nodes[k]) * tail_u[k];
    }
    out.values.push_back(std::pow(z, 1.0 - alpha) * sum);
  }
  return out;
}

RationalFit rational_fit(std::span<const double> xi, std::span<const double> values, int poles) {
  const int n = static_cast<int>(xi.size());
  if (poles < 1 || n < 2 * poles + 1 || values.size() != xi.size()) {
    throw UsageError("rational_fit needs at least 2N+1 samples for N poles");
  }
  const double scale = *std::max_element(xi.begin(), xi.end());
  // S(x) Q(x) = P(x) with monic Q of degree N, reweighted by 1/|Q_prev|.
  VectorXd q = VectorXd::Zero(poles);
  VectorXd weight = VectorXd::Ones(n);
  for (int sweep = 0; sweep < 6; ++sweep) {
    MatrixXd a(n, 2 * poles);
    VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      const double x = xi[i] / scale;
      double pw = 1.0;
      for (int k = 0; k < poles; ++k) {
        a(i, k) = weight[i] * values[i] * pw;
        a(i, poles + k) = -weight[i] * pw;
        pw *= x;
      }
      b[i] = -weight[i] * values[i] * pw;
    }
    const VectorXd sol = a.colPivHouseholderQr().solve(b);
    q = sol.head(poles);
    for (int i = 0; i < n; ++i) {
      const double x = xi[i] / scale;
      double qv = 1.0;
      for (int k = poles - 1; k >= 0; --k) qv = qv * x + q[k];
      weight[i] = 1.0 / std::max(std::abs(qv), 1e-300);
    }
  }
  MatrixXd companion = MatrixXd::Zero(poles, poles);
  for (int k = 0; k < poles; ++k) companion(k, poles - 1) = -q[k];
  for (int k = 1; k < poles; ++k) companion(k, k - 1) = 1.0;
  const Eigen::EigenSolver<MatrixXd> es(companion);
  RationalFit fit;
  for (int k = 0; k < poles; ++k) fit.lambdas.push_back(-es.eigenvalues()[k].real() * scale);
  std::sort(fit.lambdas.begin(), fit.lambdas.end());
  MatrixXd a(n, poles);
  VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < poles; ++k) a(i, k) = 1.0 / (xi[i] + fit.lambdas[k]);
    b[i] = values[i];
  }
  const VectorXd r = a.colPivHouseholderQr().solve(b);
  fit.residues.assign(r.data(), r.data() + poles);
  fit.residual = (a * r - b).norm();
  return fit;
}

namespace {

struct OperatorTarget {
  std::vector<double> sqrt_lambdas;
  std::vector<double> ends;  // NaN where the mode carries no amplitude
  int basis_dim;
  int intervals;
};

struct OperatorFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;

  const OperatorTarget* target;
  int used_ends;

  int inputs() const { return target->basis_dim + 2; }
  int values() const { return static_cast<int>(target->sqrt_lambdas.size()) + used_ends; }

  int operator()(const VectorXd& x, VectorXd& f) const {
    f.resize(values());
    const std::size_t count = target->sqrt_lambdas.size();
    try {
      const std::vector<double> c(x.data(), x.data() + target->basis_dim);
      const Potential p = Potential::from_cosine(c, target->intervals);
      const RobinPair robin{std::exp(x[target->basis_dim]), std::exp(x[target->basis_dim + 1])};
      EigenOptions eo;
      eo.values_only = true;
      const Spectrum s = eigensystem(p, robin, static_cast<int>(count), eo);
      int row = 0;
      for (std::size_t n = 0; n < count; ++n) f[row++] = std::sqrt(s.lambdas[n]) - target->sqrt_lambdas[n];
      for (std::size_t n = 0; n < count; ++n) {
        if (std::isfinite(target->ends[n])) f[row++] = s.phi_end[n] - target->ends[n];
      }
    } catch (const Error&) {
      f.setConstant(1e3);  // outside the admissible set (negative potential, failed solve)
    }
    return 0;
  }
};

}  // namespace

OperatorRecovery recover_operator(const SpectralFingerprint& fp, const BoundaryTrace& trace_right, int basis_dim,
                                  const OperatorFitOptions& options) {
  if (basis_dim < 1) throw UsageError("basis_dim must be positive");
  if (fp.failed || fp.lambdas.empty() || !std::isfinite(fp.alpha)) {
    throw FitError("recover_operator: the spectral fit failed, nothing to match");
  }
  const int count = static_cast<int>(fp.size());
  if (count < basis_dim + 2) {
    std::ostringstream os;
    os << "recover_operator: " << count << " fitted modes cannot determine " << basis_dim + 2
       << " unknowns (need at least basis_dim + 2 modes)";
    throw UsageError(os.str());
  }
  trace_right.validate();

  // Right amplitudes projected on the fitted modes.
  const ModeBasis basis(fp.alpha, trace_right.times);
  const int pm = basis.per_mode();
  MatrixXd phi(basis.rows(), count * pm);
  for (int m = 0; m < count; ++m) basis.values(fp.lambdas[m], phi, m * pm);
  const VectorXd right = Eigen::Map<const VectorXd>(trace_right.right.data(), basis.rows());
  const VectorXd r = phi.colPivHouseholderQr().solve(right);

  OperatorTarget target{{}, {}, basis_dim, options.intervals};
  double amp_peak = 0.0;
  for (int m = 0; m < count; ++m) {
    amp_peak = std::max(amp_peak, std::abs(fp.pn[m]) + (fp.pn0 ? std::abs((*fp.pn0)[m]) : 0.0));
  }
  int used = 0;
  for (int m = 0; m < count; ++m) {
    target.sqrt_lambdas.push_back(std::sqrt(fp.lambdas[m]));
    const double p = fp.pn[m], p0 = fp.pn0 ? (*fp.pn0)[m] : 0.0;
    const double rp = r[m * pm], rp0 = pm == 2 ? r[m * pm + 1] : 0.0;
    const double w = p * p + p0 * p0;
    if (std::sqrt(w) > 1e-8 * amp_peak) {
      target.ends.push_back((rp * p + rp0 * p0) / w);
      ++used;
    } else {
      target.ends.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  const OperatorFunctor functor{&target, used};

  // Starting points: omega = h + H + c0/2 from the largest fitted eigenvalue.
  std::vector<VectorXd> starts;
  if (options.start) {
    if (static_cast<int>(options.start->size()) != basis_dim + 2) {
      throw UsageError("operator start must hold basis_dim coefficients followed by h and H");
    }
    VectorXd x(basis_dim + 2);
    for (int k = 0; k < basis_dim; ++k) x[k] = (*options.start)[k];
    x[basis_dim] = std::log((*options.start)[basis_dim]);
    x[basis_dim + 1] = std::log((*options.start)[basis_dim + 1]);
    starts.push_back(x);
  } else {
    const double mpi = (count - 1) * std::numbers::pi;
    const double omega = count > 1 ? mpi * (target.sqrt_lambdas.back() - mpi) : fp.lambdas[0];
    for (double h : {0.5, 1.0, 2.0}) {
      for (double hh : {0.5, 1.0, 2.0}) {
        VectorXd x = VectorXd::Zero(basis_dim + 2);
        x[0] = std::max(0.0, 2.0 * (omega - h - hh));
        x[basis_dim] = std::log(h);
        x[basis_dim + 1] = std::log(hh);
        starts.push_back(x);
      }
    }
  }
  std::vector<std::pair<double, VectorXd>> ranked;
  for (const VectorXd& x : starts) {
    VectorXd f;
    functor(x, f);
    ranked.emplace_back(f.norm(), x);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  OperatorRecovery best;
  best.misfit = std::numeric_limits<double>::infinity();
  VectorXd best_x = ranked.front().second;
  if (ranked.front().first <= options.tolerance) {
    best.misfit = ranked.front().first;
    best.converged = true;
  } else {
    const std::size_t tries = std::min<std::size_t>(3, ranked.size());
    for (std::size_t s = 0; s < tries; ++s) {
      VectorXd x = ranked[s].second;
      Eigen::NumericalDiff<OperatorFunctor> numdiff(functor);
      Eigen::LevenbergMarquardt<Eigen::NumericalDiff<OperatorFunctor>> lm(numdiff);
      lm.parameters.ftol = 1e-14;
      lm.parameters.xtol = 1e-14;
      lm.parameters.maxfev = options.max_evaluations;
      const auto status = lm.minimize(x);
      VectorXd f;
      functor(x, f);
      if (f.norm() < best.misfit) {
        best.misfit = f.norm();
        best_x = x;
        best.iterations = static_cast<int>(lm.iter);
        best.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                         status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                         status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                         status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                         status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                         status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                         f.norm() <= options.tolerance;
        if (!best.converged) {
          std::ostringstream os;
          os << "optimizer stopped with status " << static_cast<int>(status) << " at misfit " << f.norm();
          best.diagnostic = os.str();
        } else {
          best.diagnostic.clear();
        }
      }
    }
  }
  best.coefficients.assign(best_x.data(), best_x.data() + basis_dim);
  best.robin = {std::exp(best_x[basis_dim]), std::exp(best_x[basis_dim + 1])};
  try {
    best.potential = Potential::from_cosine(best.coefficients, options.intervals);
  } catch (const DomainError&) {
    best.converged = false;
    best.diagnostic = "recovered potential is negative somewhere; returned p = 0";
  }
  return best;
}

InitialData recover_initial(const SpectralFingerprint& fp, const Spectrum& spec) {
  InitialData d;
  d.a.assign(static_cast<std::size_t>(spec.cells) + 1, 0.0);
  if (fp.pn0) d.a0 = d.a;
  if (fp.failed && fp.lambdas.empty()) return d;
  if (fp.size() > spec.size()) throw UsageError("recover_initial: spectrum has fewer modes than the fingerprint");
  for (std::size_t n = 0; n < fp.size(); ++n) {
    for (std::size_t i = 0; i < d.a.size(); ++i) {
      d.a[i] += fp.pn[n] * spec.phis[n][i];
      if (fp.pn0) (*d.a0)[i] += (*fp.pn0)[n] * spec.phis[n][i];
    }
  }
  return d;
}

namespace {

// t = xi^(1/kappa); traces of order alpha < 1 are smooth in xi = t^alpha.
struct Warp {
  double kappa;
  double xi(double t) const { return kappa == 1.0 ? t : std::pow(t, kappa); }
  double t(double xi) const { return kappa == 1.0 ? xi : std::pow(xi, 1.0 / kappa); }
  double dt(double xi) const { return kappa == 1.0 ? 1.0 : std::pow(xi, 1.0 / kappa - 1.0) / kappa; }
};

struct Node {
  double s, w;
};

// Gauss rule in xi for int_l^r f(s) ds.
void warped_gauss(const Warp& warp, const GaussRule& g, double l, double r, std::vector<Node>& out) {
  const double a = warp.xi(l), b = warp.xi(r);
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    const double x = a + 0.5 * (b - a) * (g.nodes[q] + 1.0);
    out.push_back({warp.t(x), 0.5 * (b - a) * g.weights[q] * warp.dt(x)});
  }
}

// J^gamma of the source trace, a cubic spline in xi through (0, 0) and the samples.
class FractionalIntegrator {
 public:
  FractionalIntegrator(const std::vector<double>& t, const std::vector<double>& f, const Warp& warp)
      : t_(t), warp_(warp), rule_(gauss_legendre(8)), near_rule_(gauss_legendre(16)) {
    std::vector<double> xi;
    for (double v : t) xi.push_back(warp.xi(v));
    spline_ = CubicSpline(xi, f);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      std::vector<Node> nodes;
      warped_gauss(warp, rule_, t[i], t[i + 1], nodes);
      for (const Node& n : nodes) far_.push_back({n.s, n.w * value(n.s)});
    }
  }

  double value(double s) const { return spline_(warp_.xi(s)); }

  double operator()(double gamma, double tau) const {
    if (gamma == 0.0) return value(tau);
    const std::size_t points = rule_.nodes.size();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < t_.size() && t_[i] < tau; ++i) {
      const double l = t_[i], r = std::min(t_[i + 1], tau);
      if (r == t_[i + 1] && tau - r >= 2.0 * (r - l)) {
        for (std::size_t q = 0; q < points; ++q) {
          const Node& n = far_[i * points + q];
          sum += n.w * std::pow(tau - n.s, gamma - 1.0);
        }
        continue;
      }
      // Left half in xi; right half with v = (tau - s)^gamma, which absorbs the kernel.
      const double mid = 0.5 * (l + r);
      std::vector<Node> nodes;
      warped_gauss(warp_, near_rule_, l, mid, nodes);
      for (const Node& n : nodes) sum += n.w * std::pow(tau - n.s, gamma - 1.0) * value(n.s);
      const double va = std::pow(tau - r, gamma), vb = std::pow(tau - mid, gamma);
      for (std::size_t q = 0; q < near_rule_.nodes.size(); ++q) {
        const double v = va + 0.5 * (vb - va) * (near_rule_.nodes[q] + 1.0);
        sum += 0.5 * (vb - va) * near_rule_.weights[q] / gamma * value(tau - std::pow(v, 1.0 / gamma));
      }
    }
    return sum / std::tgamma(gamma);
  }

 private:
  const std::vector<double>& t_;
  Warp warp_;
  GaussRule rule_, near_rule_;
  CubicSpline spline_;
  std::vector<Node> far_;  // per-interval nodes with spline values folded into the weights
};

constexpr double kAnchor = 1e-3;      // Tikhonov weight on the first value relative to the jumps
constexpr double kRadau = 1.0 / 3.0;  // first Radau IIA collocation parameter

// Tikhonov solution x = L^-1 w with the filter factors of the SVD of A L^-1;
// mu is the largest value whose residual stays within delta.
VectorXd tikhonov(const Eigen::BDCSVD<MatrixXd>& svd, const MatrixXd& l_inv, const VectorXd& m, double delta,
                  double& mu) {
  const MatrixXd& u = svd.matrixU();
  const VectorXd& sigma = svd.singularValues();
  const VectorXd beta = u.transpose() * m;
  const double outside = std::max(0.0, m.squaredNorm() - beta.squaredNorm());
  auto residual = [&](double x) {
    double r = outside;
    for (int i = 0; i < beta.size(); ++i) {
      const double f = x / (sigma[i] * sigma[i] + x);
      r += f * f * beta[i] * beta[i];
    }
    return std::sqrt(r);
  };
  const double smax = sigma.size() > 0 ? sigma[0] : 0.0;
  double lo = 1e-32 * smax * smax, hi = smax * smax;
  if (residual(lo) > delta) {
    mu = lo;
  } else if (residual(hi) <= delta) {
    mu = hi;
  } else {
    for (int it = 0; it < 80; ++it) {
      const double mid = std::sqrt(lo * hi);
      (residual(mid) <= delta ? lo : hi) = mid;
    }
    mu = lo;
  }
  VectorXd w = VectorXd::Zero(svd.matrixV().rows());
  for (int i = 0; i < beta.size(); ++i) w += (sigma[i] / (sigma[i] * sigma[i] + mu) * beta[i]) * svd.matrixV().col(i);
  return l_inv * w;
}

}  // namespace

SourceDeconvolver::SourceDeconvolver(std::span<const double> times, const SourceSpec& source) {
  source.validate();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw UsageError("deconvolution times must be positive and strictly increasing");
    }
  }
  if (times.size() < 4) throw UsageError("deconvolution needs at least four samples");
  if (source.theta_times.back() < times.back()) throw UsageError("theta samples must cover the trace window");
  grid_.push_back(0.0);
  grid_.insert(grid_.end(), times.begin(), times.end());
  theta_ = CubicSpline(source.theta_times, source.theta_values);
  double theta_max = 0.0;
  for (double v : source.theta_values) theta_max = std::max(theta_max, std::abs(v));
  weak_start_ = std::abs(source.theta_values.front()) < 1e-3 * theta_max;
}

DeconvolutionResult SourceDeconvolver::operator()(const BoundaryTrace& source_trace, double alpha,
                                                  const DeconvolutionOptions& options) const {
  source_trace.validate();
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
  if (source_trace.size() + 1 != grid_.size() ||
      !std::equal(source_trace.times.begin(), source_trace.times.end(), grid_.begin() + 1)) {
    throw UsageError("source trace times differ from the deconvolver grid");
  }
  const double gamma = alpha < 1.0 ? 1.0 - alpha : (alpha == 1.0 ? 0.0 : 2.0 - alpha);
  const Warp warp{std::min(alpha, 1.0)};

  const int intervals = static_cast<int>(grid_.size()) - 1;
  const int n = 2 * intervals;
  std::vector<double> xi, colloc;
  for (double t : grid_) xi.push_back(warp.xi(t));
  for (int k = 0; k < intervals; ++k) {
    colloc.push_back(warp.t(xi[k] + kRadau * (xi[k + 1] - xi[k])));
    colloc.push_back(grid_[k + 1]);
  }
  // Row r: int_0^tau theta(tau - s) u(s) ds at tau = colloc[r], where u on
  // interval i is the line in xi through its two collocation values.
  MatrixXd a = MatrixXd::Zero(n, n);
  const GaussRule g = gauss_legendre(8);
  std::vector<Node> nodes;
  for (int r = 0; r < n; ++r) {
    const double tau = colloc[r];
    for (int i = 0; i <= r / 2; ++i) {
      const double c1 = warp.xi(colloc[2 * i]), c2 = xi[i + 1];
      nodes.clear();
      warped_gauss(warp, g, grid_[i], std::min(grid_[i + 1], tau), nodes);
      for (const Node& q : nodes) {
        const double w = q.w * theta_(tau - q.s), x = warp.xi(q.s);
        a(r, 2 * i) += w * (c2 - x) / (c2 - c1);
        a(r, 2 * i + 1) += w * (x - c1) / (c2 - c1);
      }
    }
  }
  // L u = (kAnchor u_0, u_1 - u_0, ..., u_{n-1} - u_{n-2}); L^-1 is a scaled cumulative sum.
  MatrixXd l_inv = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    l_inv(i, 0) = 1.0 / kAnchor;
    for (int j = 1; j <= i; ++j) l_inv(i, j) = 1.0;
  }
  const Eigen::BDCSVD<MatrixXd> svd(a * l_inv, Eigen::ComputeThinU | Eigen::ComputeThinV);

  DeconvolutionResult res;
  res.ill_posed_warning = weak_start_;
  res.trace.times = source_trace.times;
  for (int side = 0; side < 2; ++side) {
    std::vector<double> f{0.0};
    const auto& src = side == 0 ? source_trace.left : source_trace.right;
    f.insert(f.end(), src.begin(), src.end());
    const FractionalIntegrator integrate(grid_, f, warp);
    VectorXd rhs(n);
    for (int r = 0; r < n; ++r) rhs[r] = integrate(gamma, colloc[r]);
    const double rms = rhs.norm() / std::sqrt(static_cast<double>(n));
    const double delta = options.safety * std::sqrt(static_cast<double>(n)) * (options.noise_level + options.floor) * rms;
    double mu = 0.0;
    const VectorXd u = rhs.norm() == 0.0 ? VectorXd::Zero(n) : tikhonov(svd, l_inv, rhs, delta, mu);
    (side == 0 ? res.mu_left : res.mu_right) = mu;
    auto& out = side == 0 ? res.trace.left : res.trace.right;
    for (int k = 1; k < n; k += 2) out.push_back(u[k]);
  }
  return res;
}

DeconvolutionResult deconvolve_source(const BoundaryTrace& source_trace, const SourceSpec& source, double alpha,
                                      const DeconvolutionOptions& options) {
  return SourceDeconvolver(source_trace.times, source)(source_trace, alpha, options);
}

SourceOrderRecovery recover_source_order(const BoundaryTrace& source_trace, const SourceSpec& source,
                                         const FitOptions& options, const DeconvolutionOptions& deconv) {
  check_options(options);
  const SourceDeconvolver solver(source_trace.times, source);
  std::map<double, TraceData> cache;
  auto data_at = [&](double beta) -> const TraceData& {
    auto it = cache.find(beta);
    if (it == cache.end()) it = cache.emplace(beta, collect(solver(source_trace, beta, deconv).trace, options.endpoints)).first;
    return it->second;
  };
  const OrderSearch s = search_order(data_at, options);
  SourceOrderRecovery out;
  out.scan_alpha = s.grid;
  out.scan_residual = s.residual;
  out.profile_alpha = s.alpha;
  out.deconvolved = solver(source_trace, s.alpha, deconv).trace;
  // Free-order refit of the deconvolved trace in a window around the profile order.
  FitOptions local = options;
  local.alpha_lo = std::max(options.alpha_lo, s.alpha - options.alpha_step);
  local.alpha_hi = std::min(options.alpha_hi, s.alpha + options.alpha_step);
  out.refit = fit_order_and_modes(out.deconvolved, local);
  return out;
}

double distinguishability(const ModelParams& a, const InitialData& data_a, const ModelParams& b,
                          const InitialData& data_b, double t_end, std::size_t t_count, int modes) {
  const std::vector<double> times = default_time_grid(t_end, t_count, true, 1e-3 * t_end);
  auto trace = [&](const ModelParams& p, const InitialData& d) {
    p.validate();
    EigenOptions eo;
    eo.cells = d.cells();
    const Spectrum spec = eigensystem(p.potential, p.robin, modes, eo);
    return boundary_trace(p, d, spec, mode_coefficients(d, spec), times);
  };
  const BoundaryTrace ta = trace(a, data_a), tb = trace(b, data_b);
  double gap = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    gap = std::max({gap, std::abs(ta.left[k] - tb.left[k]), std::abs(ta.right[k] - tb.right[k])});
  }
  return gap;
}

bool assumption_union_check(std::span<const ModeCoefficients> sets, int count, double tol) {
  if (sets.empty()) throw UsageError("assumption_union_check needs at least one coefficient set");
  for (int n = 0; n < count; ++n) {
    bool excited = false;
    for (const ModeCoefficients& c : sets) {
      const double v = (static_cast<std::size_t>(n) < c.pn.size() ? std::abs(c.pn[n]) : 0.0) +
                       (c.pn0 && static_cast<std::size_t>(n) < c.pn0->size() ? std::abs((*c.pn0)[n]) : 0.0);
      if (v >= tol) {
        excited = true;
        break;
      }
    }
    if (!excited) return false;
  }
  return true;
}

}  // namespace fdw
