#include "fdw/mittag_leffler.hpp"

#include <math.h>  // lgamma_r

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fdw/errors.hpp"

namespace fdw {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_gamma_abs(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

// sin(pi x) with argument reduction, exact zeros at the integers.
double sin_pi(double x) {
  if (x == std::floor(x)) return 0.0;
  const double r = x - 2.0 * std::round(0.5 * x);
  return std::sin(kPi * r);
}

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

struct Kahan {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

void check_params(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    std::ostringstream os;
    os << "Mittag-Leffler order alpha must lie in (0,2], got " << alpha;
    throw DomainError(os.str());
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    std::ostringstream os;
    os << "Mittag-Leffler parameter beta must be positive, got " << beta;
    throw DomainError(os.str());
  }
}

// ---------------------------------------------------------------------------
// Laplace-transform inversion on a parabolic contour, gamma = 1 specialisation
// of Garrappa's optimal-parameter algorithm. The contour is
// s(u) = mu (1 + i u)^2, discretised with the trapezoidal rule at u_k = k h.

struct ContourParams {
  double mu = 0.0;
  double h = 0.0;
  double n = kInf;
};

constexpr double kLogEps = -36.043653389117154;  // log(2^-52)

ContourParams optimal_bounded(double phi_j, double phi_j1, double pj, double qj,
                              double log_epsilon) {
  constexpr double fac = 1.01;
  const double f_max = std::exp(log_epsilon - kLogEps);
  const double sq_phi_j = std::sqrt(phi_j);
  const double threshold = 2.0 * std::sqrt(log_epsilon - kLogEps);
  const double sq_phi_j1 = std::min(std::sqrt(phi_j1), threshold - sq_phi_j);

  double sq_bar_j = 0.0, sq_bar_j1 = 0.0, f_bar = 1.0;
  bool admissible = false;
  if (pj < 1e-14 && qj < 1e-14) {
    sq_bar_j = sq_phi_j;
    sq_bar_j1 = sq_phi_j1;
    admissible = true;
  } else if (pj < 1e-14 && qj >= 1e-14) {
    sq_bar_j = sq_phi_j;
    const double f_min =
        sq_phi_j > 0 ? fac * std::pow(sq_phi_j / (sq_phi_j1 - sq_phi_j), qj) : fac;
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fq = std::pow(f_bar, -1.0 / qj);
      sq_bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
      admissible = true;
    }
  } else if (pj >= 1e-14 && qj < 1e-14) {
    sq_bar_j1 = sq_phi_j1;
    const double f_min = fac * std::pow(sq_phi_j1 / (sq_phi_j1 - sq_phi_j), pj);
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      sq_bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
      admissible = true;
    }
  } else {
    double f_min = fac * (sq_phi_j + sq_phi_j1) /
                   std::pow(sq_phi_j1 - sq_phi_j, std::max(pj, qj));
    if (f_min < f_max) {
      f_min = std::max(f_min, 1.5);
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      const double fq = std::pow(f_bar, -1.0 / qj);
      const double w = -phi_j1 / log_epsilon;
      const double den = 2.0 + w - (1.0 + w) * fp + fq;
      sq_bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
      sq_bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
      admissible = true;
    }
  }
  if (!admissible) return {};
  const double le = log_epsilon - std::log(f_bar);
  const double w = -sq_bar_j1 * sq_bar_j1 / le;
  ContourParams out;
  out.mu = std::pow(((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w), 2);
  out.h = -2.0 * kPi / le * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
  out.n = std::ceil(std::sqrt(1.0 - le / out.mu) / out.h);
  return out;
}

ContourParams optimal_unbounded(double phi_j, double pj, double log_epsilon) {
  const double sq_phi_j = std::sqrt(phi_j);
  double phibar = phi_j > 0 ? phi_j * 1.01 : 0.01;
  double sq_phibar = std::sqrt(phibar);
  constexpr double f_min = 1.0, f_max = 10.0, f_tar = 5.0;
  double nj = 0.0, a = 0.0, sq_mu = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double phi_t = phibar;
    const double le_phi = log_epsilon / phi_t;
    nj = std::ceil(phi_t / kPi * (1.0 - 1.5 * le_phi + std::sqrt(1.0 - 2.0 * le_phi)));
    a = kPi * nj / phi_t;
    sq_mu = sq_phibar * std::abs(4.0 - a) / std::abs(7.0 - std::sqrt(1.0 + 12.0 * a));
    const double fbar = std::pow((sq_phibar - sq_phi_j) / sq_mu, -pj);
    if (pj < 1e-14 || (f_min < fbar && fbar < f_max)) break;
    sq_phibar = std::pow(f_tar, -1.0 / pj) * sq_mu + sq_phi_j;
    phibar = sq_phibar * sq_phibar;
  }
  ContourParams out;
  out.mu = sq_mu * sq_mu;
  out.h = (-3.0 * a - 2.0 + 2.0 * std::sqrt(1.0 + 12.0 * a)) / (4.0 - a) / nj;
  out.n = nj;
  const double threshold = log_epsilon - kLogEps;
  if (out.mu > threshold) {
    const double q = std::abs(pj) < 1e-14 ? 0.0 : std::pow(f_tar, -1.0 / pj) * std::sqrt(out.mu);
    const double pb = std::pow(q + sq_phi_j, 2);
    if (pb < threshold) {
      const double w = std::sqrt(kLogEps / (kLogEps - log_epsilon));
      const double u = std::sqrt(-pb / kLogEps);
      out.mu = threshold;
      out.n = std::ceil(w * log_epsilon / 2.0 / kPi / (u * w - 1.0));
      out.h = std::sqrt(kLogEps / (kLogEps - log_epsilon)) / out.n;
    } else {
      out.n = kInf;
      out.h = 0.0;
    }
  }
  return out;
}

struct Singularity {
  cplx s;
  double phi;
};

struct ContourPlan {
  ContourParams params;
  std::vector<cplx> residue_poles;
};

ContourPlan plan_contour(double alpha, double beta, double z) {
  const double theta = z < 0 ? kPi : 0.0;
  const int kmin = static_cast<int>(std::ceil(-alpha / 2.0 - theta / (2.0 * kPi)));
  const int kmax = static_cast<int>(std::floor(alpha / 2.0 - theta / (2.0 * kPi)));
  const double r = std::pow(std::abs(z), 1.0 / alpha);

  std::vector<Singularity> poles;
  for (int k = kmin; k <= kmax; ++k) {
    const cplx s = std::polar(r, (theta + 2.0 * k * kPi) / alpha);
    const double phi = 0.5 * (s.real() + std::abs(s));
    if (phi > 1e-15) poles.push_back({s, phi});
  }
  std::stable_sort(poles.begin(), poles.end(),
                   [](const Singularity& a, const Singularity& b) { return a.phi < b.phi; });

  std::vector<Singularity> sing;
  sing.push_back({cplx(0.0), 0.0});
  sing.insert(sing.end(), poles.begin(), poles.end());
  const std::size_t j1_count = sing.size();

  std::vector<double> p(j1_count, 1.0), q(j1_count, 1.0), phi(j1_count + 1, kInf);
  p[0] = std::max(0.0, -2.0 * (alpha - beta + 1.0));
  q[j1_count - 1] = kInf;
  for (std::size_t j = 0; j < j1_count; ++j) phi[j] = sing[j].phi;

  double log_epsilon = std::log(1e-15);
  std::size_t best = 0;
  ContourParams best_params;
  for (int attempt = 0; attempt < 10; ++attempt) {
    best_params = ContourParams{};
    for (std::size_t j = 0; j < j1_count; ++j) {
      const bool admissible = phi[j] < (log_epsilon - kLogEps) && phi[j] < phi[j + 1];
      if (!admissible) continue;
      const ContourParams cp = j + 1 < j1_count
                                   ? optimal_bounded(phi[j], phi[j + 1], p[j], q[j], log_epsilon)
                                   : optimal_unbounded(phi[j], p[j], log_epsilon);
      if (cp.n < best_params.n) {
        best_params = cp;
        best = j;
      }
    }
    if (best_params.n <= 200) break;
    log_epsilon += std::log(10.0);
  }
  if (!std::isfinite(best_params.n)) {
    throw NumericalError("Mittag-Leffler contour regime: no admissible integration region");
  }
  ContourPlan plan;
  plan.params = best_params;
  for (std::size_t j = best + 1; j < j1_count; ++j) plan.residue_poles.push_back(sing[j].s);
  return plan;
}

constexpr double kBandRatio = 1.15;

std::vector<std::complex<double>> contour_weights_and_powers(double alpha, double beta, const ContourParams& cp,
                                                             std::vector<cplx>& s_alpha) {
  const auto n = static_cast<int>(cp.n);
  std::vector<cplx> weights;
  weights.reserve(n + 1);
  s_alpha.clear();
  s_alpha.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double u = cp.h * k;
    const cplx s = cp.mu * std::pow(cplx(1.0, u), 2);
    const cplx ds(-2.0 * cp.mu * u, 2.0 * cp.mu);
    cplx w = (cp.h / kPi) * std::exp(s) * std::pow(s, alpha - beta) * ds;
    if (k == 0) w *= 0.5;
    weights.push_back(w);
    s_alpha.push_back(std::pow(s, alpha));
  }
  return weights;
}

}  // namespace

std::string_view to_string(MlRegime r) {
  switch (r) {
    case MlRegime::Zero: return "zero";
    case MlRegime::ClosedForm: return "closed-form";
    case MlRegime::Series: return "series";
    case MlRegime::Contour: return "contour";
    case MlRegime::Asymptotic: return "asymptotic";
  }
  return "unknown";
}

double rgamma(double x) {
  if (x > 0.0) {
    if (x < 171.0) return 1.0 / std::tgamma(x);
    return std::exp(-log_gamma_abs(x));
  }
  if (is_nonpositive_integer(x)) return 0.0;
  // reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
  const double s = sin_pi(x);
  const double y = 1.0 - x;
  if (y < 171.0) return s * std::tgamma(y) / kPi;
  const double mag = std::exp(log_gamma_abs(y) + std::log(std::abs(s)) - std::log(kPi));
  return s < 0 ? -mag : mag;
}

double gamma_fn(double x) {
  if (is_nonpositive_integer(x)) {
    std::ostringstream os;
    os << "Gamma function has a pole at " << x;
    throw DomainError(os.str());
  }
  return std::tgamma(x);
}

MittagLeffler::MittagLeffler(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  check_params(alpha, beta);

  // 2^x / Gamma(x) drops below 1e-25 by x = 60, with x = alpha k
  const int series_terms = std::max(400, static_cast<int>(std::ceil(60.0 / alpha)) + 40);
  series_coeff_.resize(series_terms);
  for (int k = 0; k < series_terms; ++k) series_coeff_[k] = rgamma(alpha * k + beta);

  const int asym_terms = static_cast<int>(std::ceil(90.0 / alpha)) + 20;
  asym_coeff_.resize(asym_terms + 1);
  for (int k = 1; k <= asym_terms; ++k) asym_coeff_[k] = rgamma(beta - alpha * k);

  // With alpha < 1 the negative real axis carries no poles and the contour
  // parameters do not depend on z; precompute the nodes once.
  auto build = [&](const ContourParams& cp) {
    std::vector<cplx> s_alpha;
    const auto w = contour_weights_and_powers(alpha, beta, cp, s_alpha);
    std::vector<ContourNode> nodes;
    nodes.reserve(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) nodes.push_back({w[k], s_alpha[k]});
    return nodes;
  };
  if (alpha < 1.0) {
    fixed_nodes_ = build(plan_contour(alpha, beta, -1.0).params);
  } else if (alpha > 1.0 && alpha < 2.0) {
    for (double r = kSeriesRadius / kBandRatio; r < kAsymptoticRadius * kBandRatio; r *= kBandRatio) {
      const ContourPlan plan = plan_contour(alpha, beta, -std::pow(r, alpha));
      band_plans_.push_back({r, !plan.residue_poles.empty(), build(plan.params)});
    }
  }
}

bool MittagLeffler::closed_form(double z, double& out) const {
  if (alpha_ == 1.0) {
    if (beta_ == 1.0) {
      out = std::exp(z);
      return true;
    }
    if (beta_ == 2.0) {
      out = std::expm1(z) / z;
      return true;
    }
  } else if (alpha_ == 2.0) {
    const double r = std::sqrt(std::abs(z));
    if (beta_ == 1.0) {
      out = z < 0 ? std::cos(r) : std::cosh(r);
      return true;
    }
    if (beta_ == 2.0) {
      out = z < 0 ? std::sin(r) / r : std::sinh(r) / r;
      return true;
    }
  }
  return false;
}

MlRegime MittagLeffler::regime(double z) const {
  if (z == 0.0) return MlRegime::Zero;
  double tmp = 0.0;
  if (closed_form(z, tmp)) return MlRegime::ClosedForm;
  if (z > 0.0) return MlRegime::Series;
  const double r = std::pow(-z, 1.0 / alpha_);
  if (r <= kSeriesRadius) return MlRegime::Series;
  if (r >= kAsymptoticRadius) return MlRegime::Asymptotic;
  return MlRegime::Contour;
}

double MittagLeffler::operator()(double z) const {
  if (std::isnan(z)) throw DomainError("Mittag-Leffler argument is NaN");
  if (z > kMlMaxPositiveArgument) {
    std::ostringstream os;
    os << "Mittag-Leffler argument " << z << " exceeds the positive cap "
       << kMlMaxPositiveArgument;
    throw DomainError(os.str());
  }
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  switch (regime(z)) {
    case MlRegime::Zero: return series_coeff_[0];
    case MlRegime::ClosedForm: {
      double v = 0.0;
      closed_form(z, v);
      return v;
    }
    case MlRegime::Series: return z > 0 ? series_positive(z) : series(z, false);
    case MlRegime::Asymptotic: return asymptotic(z, false);
    case MlRegime::Contour: return contour(z);
  }
  return 0.0;
}

double MittagLeffler::evaluate_with(MlRegime r, double z) const {
  switch (r) {
    case MlRegime::Zero: return series_coeff_[0];
    case MlRegime::ClosedForm: {
      double v = 0.0;
      if (!closed_form(z, v)) throw NumericalError("closed-form regime not available");
      return v;
    }
    case MlRegime::Series: return z > 0 ? series_positive(z) : series(z, true);
    case MlRegime::Asymptotic: return asymptotic(z, true);
    case MlRegime::Contour: return contour(z);
  }
  return 0.0;
}

double MittagLeffler::series(double z, bool strict) const {
  Kahan acc;
  double zk = 1.0;
  double max_term = 0.0;
  int small_run = 0;
  for (std::size_t k = 0; k < series_coeff_.size(); ++k) {
    const double term = zk * series_coeff_[k];
    acc.add(term);
    max_term = std::max(max_term, std::abs(term));
    if (std::abs(term) <= 1e-17 * std::abs(acc.sum)) {
      if (++small_run >= 2) {
        if (strict && max_term > 1e4 * std::abs(acc.sum)) {
          throw NumericalError("Mittag-Leffler series regime: cancellation too severe");
        }
        return acc.sum;
      }
    } else {
      small_run = 0;
    }
    zk *= z;
  }
  throw NumericalError("Mittag-Leffler series regime: no convergence within term budget");
}

double MittagLeffler::series_positive(double z) const {
  // all terms positive; log-space terms avoid overflow of z^k and Gamma
  const double lz = std::log(z);
  Kahan acc;
  bool past_peak = false;
  double prev = -1.0;
  for (int k = 0; k < 200000; ++k) {
    const double arg = alpha_ * k + beta_;
    const double term = std::exp(k * lz - log_gamma_abs(arg));
    if (!std::isfinite(term)) throw NumericalError("Mittag-Leffler series regime: overflow");
    acc.add(term);
    if (term < prev) past_peak = true;
    prev = term;
    if (past_peak && term <= 1e-17 * acc.sum) return acc.sum;
  }
  throw NumericalError("Mittag-Leffler series regime: no convergence for positive argument");
}

double MittagLeffler::asymptotic(double z, bool strict) const {
  const double az = -z;
  const double lz = std::log(az);
  const double inv = -1.0 / az;  // z^{-1}
  Kahan acc;
  double zk = 1.0;
  double best_env = kInf;
  double tail = kInf;
  for (std::size_t k = 1; k < asym_coeff_.size(); ++k) {
    zk *= inv;
    const double x = 1.0 - beta_ + alpha_ * static_cast<double>(k);
    if (!is_nonpositive_integer(x)) {
      const double env = std::exp(-static_cast<double>(k) * lz + log_gamma_abs(x)) / kPi;
      if (env > best_env) {
        tail = best_env;
        break;
      }
      best_env = env;
    }
    acc.add(-zk * asym_coeff_[k]);
    if (best_env <= 1e-17 * std::abs(acc.sum)) {
      tail = best_env;
      break;
    }
    tail = best_env;
  }
  double value = acc.sum;
  if (alpha_ > 1.0) {
    const double r = std::pow(az, 1.0 / alpha_);
    const cplx s = std::polar(r, kPi / alpha_);
    value += 2.0 / alpha_ * (std::pow(s, 1.0 - beta_) * std::exp(s)).real();
  }
  if (strict && tail > 1e-12 * std::max(std::abs(value), std::abs(acc.sum))) {
    throw NumericalError("Mittag-Leffler asymptotic regime: truncation error too large");
  }
  return value;
}

double MittagLeffler::contour(double z) const {
  if (z < 0 && !fixed_nodes_.empty()) {
    double sum = 0.0;
    for (const auto& node : fixed_nodes_) sum += (node.weight / (node.s_alpha - z)).imag();
    return sum;
  }
  if (z < 0 && !band_plans_.empty()) {
    // A plan made for a smaller R stays valid when it keeps the poles outside
    // its region (residues added); a plan made for a larger R stays valid when
    // the contour already runs beyond the poles.
    const double r = std::pow(-z, 1.0 / alpha_);
    const double pos = std::log(r / band_plans_.front().radius) / std::log(kBandRatio);
    const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
    const BandPlan* plan = nullptr;
    if (j >= 0 && j < static_cast<std::ptrdiff_t>(band_plans_.size()) && band_plans_[j].adds_residues) {
      plan = &band_plans_[j];
    } else if (j + 1 >= 0 && j + 1 < static_cast<std::ptrdiff_t>(band_plans_.size()) &&
               !band_plans_[j + 1].adds_residues) {
      plan = &band_plans_[j + 1];
    }
    if (plan != nullptr) {
      double sum = 0.0;
      for (const auto& node : plan->nodes) sum += (node.weight / (node.s_alpha - z)).imag();
      if (plan->adds_residues) {
        const cplx s = std::polar(r, kPi / alpha_);
        sum += 2.0 / alpha_ * (std::pow(s, 1.0 - beta_) * std::exp(s)).real();
      }
      return sum;
    }
  }
  return contour_exact(z);
}

double MittagLeffler::contour_exact(double z) const {
  const ContourPlan plan = plan_contour(alpha_, beta_, z);
  std::vector<cplx> s_alpha;
  const auto w = contour_weights_and_powers(alpha_, beta_, plan.params, s_alpha);
  double value = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) value += (w[k] / (s_alpha[k] - z)).imag();
  for (const cplx& s : plan.residue_poles) {
    value += (std::pow(s, 1.0 - beta_) * std::exp(s)).real() / alpha_;
  }
  return value;
}

double ml(MlParams params, double z) { return MittagLeffler(params)(z); }

TimeKernels::TimeKernels(double alpha)
    : alpha_(alpha), e_a1_(alpha, 1.0), e_a2_(alpha, 2.0), e_aa_(alpha, alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0,2), got " << alpha;
    throw DomainError(os.str());
  }
}

namespace {
void check_kernel_args(double lambda, double t) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("time kernel requires a finite lambda >= 0");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time kernel requires a finite t >= 0");
}
}  // namespace

double TimeKernels::e1(double lambda, double t) const {
  check_kernel_args(lambda, t);
  if (t == 0.0) return 1.0;
  return e_a1_(-lambda * std::pow(t, alpha_));
}

double TimeKernels::e2t(double lambda, double t) const {
  check_kernel_args(lambda, t);
  if (t == 0.0) return 0.0;
  return t * e_a2_(-lambda * std::pow(t, alpha_));
}

double TimeKernels::e_conv(double lambda, double t) const {
  check_kernel_args(lambda, t);
  if (t == 0.0) {
    if (alpha_ < 1.0) return kInf;
    return alpha_ == 1.0 ? 1.0 : 0.0;
  }
  return std::pow(t, alpha_ - 1.0) * e_aa_(-lambda * std::pow(t, alpha_));
}

TimeKernelTriple TimeKernels::operator()(double lambda, double t) const {
  return {e1(lambda, t), e2t(lambda, t), e_conv(lambda, t)};
}

TimeKernelTriple time_kernels(double alpha, double lambda, double t) {
  return TimeKernels(alpha)(lambda, t);
}

}  // namespace fdw
