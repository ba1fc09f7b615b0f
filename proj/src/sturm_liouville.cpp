#include "fdw/sturm_liouville.hpp"

#include <algorithm>
#include <array>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fdw/errors.hpp"

namespace fdw {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOdeTol = 1e-13;

using State2 = std::array<double, 2>;
using State1 = std::array<double, 1>;

auto make_stepper2() {
  return odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_fehlberg78<State2>());
}

std::vector<double> uniform_nodes(int cells) { return linspace(0.0, 1.0, static_cast<std::size_t>(cells) + 1); }

// Modified Pruefer phase with scale S: S phi = r sin(theta), phi' = r cos(theta).
double prufer_end(const Potential& p, double h, double lambda, double scale) {
  State1 theta{std::atan2(scale, h)};
  auto rhs = [&](const State1& y, State1& dy, double x) {
    const double s = std::sin(y[0]);
    const double c = std::cos(y[0]);
    dy[0] = scale * c * c + (lambda - p(x)) / scale * s * s;
  };
  auto stepper = odeint::make_controlled(1e-15, 1e-15, odeint::runge_kutta_fehlberg78<State1>());
  const double dx = 0.25 / std::max(1.0, std::sqrt(std::abs(lambda)));
  const std::vector<double> knots = p.nodes();  // one cubic piece per step run
  try {
    odeint::integrate_times(stepper, rhs, theta, knots.begin(), knots.end(), dx,
                            [](const State1&, double) {});
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "phase integration failed at lambda=" << lambda << ": " << e.what();
    throw NumericalError(os.str());
  }
  return theta[0];
}

double right_phase(double H, double scale) { return kPi - std::atan(scale / H); }

}  // namespace

Potential::Potential(std::vector<double> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 9) throw DomainError("potential needs at least 8 grid intervals");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw DomainError("potential samples must be finite");
    if (v < 0.0) throw DomainError("potential must be nonnegative on [0,1]");
  }
  spline_ = CubicSpline(nodes(), samples_);
}

Potential Potential::zero(int intervals) { return constant(0.0, intervals); }

Potential Potential::constant(double value, int intervals) {
  return Potential(std::vector<double>(static_cast<std::size_t>(intervals) + 1, value));
}

Potential Potential::from_function(const std::function<double(double)>& f, int intervals) {
  std::vector<double> s;
  for (double x : uniform_nodes(intervals)) s.push_back(f(x));
  return Potential(std::move(s));
}

Potential Potential::from_cosine(std::span<const double> coeffs, int intervals) {
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return from_function(
      [c](double x) {
        double v = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) v += c[k] * std::cos(kPi * k * x);
        return v;
      },
      intervals);
}

std::vector<double> Potential::nodes() const { return uniform_nodes(intervals()); }

bool Potential::is_zero() const {
  return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
}

void RobinPair::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("Robin coefficient h must be positive");
  if (!(H > 0.0) || !std::isfinite(H)) throw DomainError("Robin coefficient H must be positive");
}

IvpSamples sample_ivp(const Potential& p, double h, double lambda, std::span<const double> points) {
  IvpSamples out;
  out.phi.reserve(points.size());
  out.dphi.reserve(points.size());
  if (points.empty()) return out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i] < 0.0 || points[i] > 1.0 || (i > 0 && !(points[i] > points[i - 1]))) {
      throw UsageError("sample_ivp: points must be increasing inside [0,1]");
    }
  }
  auto rhs = [&](const State2& y, State2& dy, double x) {
    dy[0] = y[1];
    dy[1] = (p(x) - lambda) * y[0];
  };
  State2 y{1.0, h};
  // The spline potential is only C2 at its knots; stopping at every knot
  // keeps each adaptive step inside one cubic piece. integrate_times also
  // needs the start point among its times.
  const std::vector<double> knots = p.nodes();
  std::vector<double> times;
  std::vector<char> wanted;
  times.reserve(points.size() + knots.size());
  std::size_t ip = 0, ik = 0;
  while (ip < points.size() || ik < knots.size()) {
    const bool take_point = ik == knots.size() || (ip < points.size() && points[ip] <= knots[ik]);
    const double t = take_point ? points[ip] : knots[ik];
    if (take_point) {
      ++ip;
      if (ik < knots.size() && knots[ik] == t) ++ik;
    } else {
      ++ik;
    }
    times.push_back(t);
    wanted.push_back(take_point ? 1 : 0);
  }
  std::size_t seen = 0;
  auto observer = [&](const State2& s, double) {
    if (wanted[seen++]) {
      out.phi.push_back(s[0]);
      out.dphi.push_back(s[1]);
    }
  };
  const double dx = 0.1 / std::max(1.0, std::sqrt(std::abs(lambda)));
  try {
    odeint::integrate_times(make_stepper2(), rhs, y, times.begin(), times.end(), dx, observer);
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "shooting integration failed at lambda=" << lambda << ": " << e.what();
    throw NumericalError(os.str());
  }
  return out;
}

ShootResult shoot(const Potential& p, double h, double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("shoot: lambda must be finite");
  const double end[1] = {1.0};
  const IvpSamples s = sample_ivp(p, h, lambda, end);
  return {s.phi[0], s.dphi[0]};
}

double characteristic(const Potential& p, const RobinPair& robin, double lambda) {
  const ShootResult r = shoot(p, robin.h, lambda);
  return r.dphi + robin.H * r.phi;
}

int eigenvalue_count(const Potential& p, const RobinPair& robin, double lambda) {
  const double scale = std::sqrt(std::max(lambda, 1.0));
  const double theta = prufer_end(p, robin.h, lambda, scale);
  const double k = std::floor((theta - right_phase(robin.H, scale)) / kPi);
  return k < 0 ? 0 : static_cast<int>(k) + 1;
}

std::vector<double> Spectrum::grid() const { return uniform_nodes(cells); }

Spectrum eigensystem(const Potential& p, const RobinPair& robin, int count, EigenOptions options) {
  robin.validate();
  if (count < 1) throw UsageError("eigensystem: need at least one mode");
  Spectrum spec;
  spec.cells = options.cells > 0 ? options.cells : std::max(64, p.intervals());
  spec.omega = robin.h + robin.H + 0.5 * p.integral();
  spec.quadrature = composite_gauss(0.0, 1.0, spec.cells);

  namespace tools = boost::math::tools;
  double lower = 0.0;
  for (int n = 1; n <= count; ++n) {
    const double m = n - 1;
    double guess = m == 0 ? std::max(spec.omega, 1.0)
                          : std::pow(m * kPi + spec.omega / (m * kPi), 2);
    guess = std::max(guess, lower + 1.0);
    const double scale = std::sqrt(std::max(guess, 1.0));
    const double target = right_phase(robin.H, scale) + m * kPi;
    auto f = [&](double lam) { return prufer_end(p, robin.h, lam, scale) - target; };

    double lo = lower, flo = f(lo);
    if (flo >= 0.0) {
      std::ostringstream os;
      os << "eigenvalue " << n << " not bracketed from below at lambda=" << lo;
      throw SpectralError(os.str());
    }
    double hi = guess + 2.0 * (m + 1.0) * kPi, fhi = f(hi);
    for (int expand = 0; fhi <= 0.0; ++expand) {
      if (expand > 60) throw SpectralError("eigenvalue bracket expansion failed");
      lo = hi;
      flo = fhi;
      hi = lower + 2.0 * (hi - lower) + 1.0;
      fhi = f(hi);
    }
    std::uintmax_t iters = 200;
    auto bracket = tools::toms748_solve(f, lo, hi, flo, fhi, tools::eps_tolerance<double>(50), iters);
    double lam = 0.5 * (bracket.first + bracket.second);

    // polish on W itself, which has a simple zero here
    auto w = [&](double l) { return characteristic(p, robin, l); };
    double pad = 1e-10 * std::max(1.0, lam);
    double a = bracket.first - pad, b = bracket.second + pad;
    double wa = w(a), wb = w(b);
    for (int widen = 0; wa * wb > 0.0 && widen < 8; ++widen) {
      pad *= 4.0;
      a = bracket.first - pad;
      b = bracket.second + pad;
      wa = w(a);
      wb = w(b);
    }
    if (wa * wb < 0.0) {
      std::uintmax_t it2 = 100;
      auto r = tools::toms748_solve(w, a, b, wa, wb, tools::eps_tolerance<double>(52), it2);
      lam = std::abs(w(r.first)) < std::abs(w(r.second)) ? r.first : r.second;
    }
    const double residual = std::abs(w(lam));
    if (residual > options.tolerance * std::max(1.0, std::sqrt(lam))) {
      std::ostringstream os;
      os << "eigenvalue " << n << " at lambda=" << lam << " leaves |W|=" << residual;
      throw SpectralError(os.str());
    }
    if (!spec.lambdas.empty() && !(lam > spec.lambdas.back())) {
      throw SpectralError("eigenvalues not strictly increasing; refine bracketing");
    }
    spec.lambdas.push_back(lam);
    lower = lam;
  }

  // audit: exactly n eigenvalues below each midpoint
  for (int n = 1; n < count; ++n) {
    const double mid = 0.5 * (spec.lambdas[n - 1] + spec.lambdas[n]);
    if (eigenvalue_count(p, robin, mid) != n) {
      std::ostringstream os;
      os << "eigenvalue count audit failed between modes " << n << " and " << n + 1;
      throw SpectralError(os.str());
    }
  }

  if (options.values_only) {
    for (double lam : spec.lambdas) {
      const ShootResult r = shoot(p, robin.h, lam);
      spec.phi_end.push_back(r.phi);
      spec.dphi_end.push_back(r.dphi);
    }
    return spec;
  }

  // eigenfunctions at grid nodes and quadrature nodes, in one sweep each
  const std::vector<double> nodes = spec.grid();
  const auto& gx = spec.quadrature.nodes;
  const std::size_t per_cell = gx.size() / spec.cells;
  std::vector<double> merged;
  std::vector<std::size_t> node_pos, gauss_pos;
  merged.reserve(nodes.size() + gx.size());
  for (int c = 0; c < spec.cells; ++c) {
    node_pos.push_back(merged.size());
    merged.push_back(nodes[c]);
    for (std::size_t k = 0; k < per_cell; ++k) {
      gauss_pos.push_back(merged.size());
      merged.push_back(gx[c * per_cell + k]);
    }
  }
  node_pos.push_back(merged.size());
  merged.push_back(1.0);

  for (double lam : spec.lambdas) {
    const IvpSamples s = sample_ivp(p, robin.h, lam, merged);
    std::vector<double> phi, dphi, phig;
    phi.reserve(node_pos.size());
    for (std::size_t i : node_pos) {
      phi.push_back(s.phi[i]);
      dphi.push_back(s.dphi[i]);
    }
    double rho = 0.0;
    phig.reserve(gauss_pos.size());
    for (std::size_t k = 0; k < gauss_pos.size(); ++k) {
      const double v = s.phi[gauss_pos[k]];
      phig.push_back(v);
      rho += spec.quadrature.weights[k] * v * v;
    }
    spec.phi_end.push_back(phi.back());
    spec.dphi_end.push_back(dphi.back());
    spec.rhos.push_back(rho);
    spec.phis.push_back(std::move(phi));
    spec.dphis.push_back(std::move(dphi));
    spec.phis_gauss.push_back(std::move(phig));
  }
  return spec;
}

InitialData InitialData::from_function(const std::function<double(double)>& a, int cells) {
  InitialData d;
  for (double x : uniform_nodes(cells)) d.a.push_back(a(x));
  return d;
}

InitialData InitialData::from_functions(const std::function<double(double)>& a,
                                        const std::function<double(double)>& a0, int cells) {
  InitialData d = from_function(a, cells);
  std::vector<double> v;
  for (double x : uniform_nodes(cells)) v.push_back(a0(x));
  d.a0 = std::move(v);
  return d;
}

InitialData InitialData::from_modes(const Spectrum& spec, std::span<const double> c) {
  if (c.size() > spec.size()) throw UsageError("from_modes: more coefficients than modes");
  InitialData d;
  d.a.assign(static_cast<std::size_t>(spec.cells) + 1, 0.0);
  for (std::size_t n = 0; n < c.size(); ++n) {
    for (std::size_t i = 0; i < d.a.size(); ++i) d.a[i] += c[n] * spec.phis[n][i];
  }
  return d;
}

std::function<double(double)> robin_compatible(std::function<double(double)> f,
                                               std::function<double(double)> fp, RobinPair robin) {
  const double c1 = robin.h * f(0.0) - fp(0.0);
  const double c2 = fp(1.0) + robin.H * f(1.0);
  return [f = std::move(f), c1, c2](double x) {
    return f(x) + c1 * x * (1.0 - x) * (1.0 - x) + c2 * x * x * (1.0 - x);
  };
}

double robin_defect(std::span<const double> samples, const RobinPair& robin) {
  const int cells = static_cast<int>(samples.size()) - 1;
  const CubicSpline s(uniform_nodes(cells), std::vector<double>(samples.begin(), samples.end()));
  return std::max(std::abs(s.derivative(0.0) - robin.h * s(0.0)),
                  std::abs(s.derivative(1.0) + robin.H * s(1.0)));
}

double inner_product(std::span<const double> samples, const Spectrum& spec, std::size_t n) {
  if (static_cast<int>(samples.size()) != spec.cells + 1) {
    throw UsageError("inner product: sample grid does not match the spectrum grid");
  }
  const CubicSpline s(spec.grid(), std::vector<double>(samples.begin(), samples.end()));
  const auto& q = spec.quadrature;
  double sum = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) sum += q.weights[k] * s(q.nodes[k]) * spec.phis_gauss[n][k];
  return sum;
}

ModeCoefficients mode_coefficients(const InitialData& data, const Spectrum& spec) {
  if (data.cells() != spec.cells || (data.a0 && static_cast<int>(data.a0->size()) != spec.cells + 1)) {
    std::ostringstream os;
    os << "initial data grid (" << data.cells() << " cells) does not match the spectrum grid ("
       << spec.cells << " cells)";
    throw UsageError(os.str());
  }
  const auto& q = spec.quadrature;
  auto project = [&](const std::vector<double>& samples) {
    const CubicSpline s(spec.grid(), samples);
    std::vector<double> at(q.nodes.size());
    for (std::size_t k = 0; k < at.size(); ++k) at[k] = q.weights[k] * s(q.nodes[k]);
    std::vector<double> c(spec.size());
    for (std::size_t n = 0; n < spec.size(); ++n) {
      double sum = 0.0;
      for (std::size_t k = 0; k < at.size(); ++k) sum += at[k] * spec.phis_gauss[n][k];
      c[n] = sum / spec.rhos[n];
    }
    return c;
  };
  ModeCoefficients out;
  out.pn = project(data.a);
  if (data.a0) out.pn0 = project(*data.a0);
  return out;
}

std::vector<int> assumption_check(const ModeCoefficients& coeffs, int count, double tol) {
  if (static_cast<int>(coeffs.size()) < count) throw UsageError("assumption_check: too few coefficients");
  std::vector<int> bad;
  for (int n = 0; n < count; ++n) {
    double mag = std::abs(coeffs.pn[n]);
    if (coeffs.pn0) mag += std::abs((*coeffs.pn0)[n]);
    if (mag < tol) bad.push_back(n + 1);
  }
  return bad;
}

}  // namespace fdw
