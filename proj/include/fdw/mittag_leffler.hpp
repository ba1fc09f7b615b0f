#pragma once

#include <array>
#include <complex>
#include <string_view>
#include <vector>

namespace fdw {

/// Order pair of the two-parameter Mittag-Leffler function E_{alpha,beta}.
///
/// alpha is accepted on (0, 2]; the endpoint alpha = 2 is kept for the
/// classical reduction E_{2,1}(-x^2) = cos(x). Model code that solves the
/// diffusion-wave equation restricts itself to the open interval.
struct MlParams {
  double alpha;
  double beta;
};

enum class MlRegime { Zero, ClosedForm, Series, Contour, Asymptotic };

std::string_view to_string(MlRegime r);

/// Largest positive argument accepted by the evaluator.
inline constexpr double kMlMaxPositiveArgument = 5.0;

/// Evaluator of E_{alpha,beta}(z) for real z <= 5, bound to one (alpha, beta).
///
/// Three regimes are combined, selected on R = |z|^(1/alpha):
///   - power series for small R (compensated summation, term-ratio stop),
///   - algebraic asymptotic expansion plus pole residues for large R,
///   - Laplace-transform inversion on an optimal parabolic contour in the
///     crossover band (Garrappa's construction).
/// alpha = 1 and alpha = 2 with beta in {1, 2} use closed forms.
///
/// Construction precomputes coefficient tables and, when the negative real
/// axis carries no poles (alpha < 1), the contour nodes; evaluation is then
/// allocation-free and const, so one instance can be shared across threads.
class MittagLeffler {
 public:
  MittagLeffler(double alpha, double beta);
  explicit MittagLeffler(MlParams p) : MittagLeffler(p.alpha, p.beta) {}

  double operator()(double z) const;

  /// Regime the dispatcher chooses for z.
  MlRegime regime(double z) const;

  /// Evaluate with a forced regime. Throws NumericalError if the regime
  /// cannot deliver full accuracy at z. Used to cross-check regimes.
  double evaluate_with(MlRegime regime, double z) const;

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  /// R = |z|^(1/alpha) below which the series is used.
  static constexpr double kSeriesRadius = 2.0;
  /// R above which the asymptotic expansion is used.
  static constexpr double kAsymptoticRadius = 40.0;

 private:
  struct ContourNode {
    std::complex<double> weight;  // h/(2 pi i) e^s s^(alpha-beta) s'
    std::complex<double> s_alpha;
  };

  // Contour fixed for a band of |z|: with alpha > 1 the poles move with z,
  // so plans are precomputed on a geometric grid of R and chosen per call.
  struct BandPlan {
    double radius;
    bool adds_residues;
    std::vector<ContourNode> nodes;
  };

  bool closed_form(double z, double& out) const;
  double contour_exact(double z) const;
  double series(double z, bool strict) const;
  double series_positive(double z) const;
  double asymptotic(double z, bool strict) const;
  double contour(double z) const;

  double alpha_;
  double beta_;
  std::vector<double> series_coeff_;  // 1/Gamma(alpha k + beta)
  std::vector<double> asym_coeff_;    // 1/Gamma(beta - alpha k), k >= 1
  std::vector<ContourNode> fixed_nodes_;  // pole-free case, k = 0 .. N
  std::vector<BandPlan> band_plans_;      // alpha > 1, R = 2 * ratio^j
};

/// E_{alpha,beta}(z). Throws DomainError for alpha outside (0,2], beta <= 0,
/// or z > kMlMaxPositiveArgument.
double ml(MlParams params, double z);

/// Reciprocal Gamma function, exact zero at the non-positive integers.
double rgamma(double x);

/// Gamma function (thin wrapper over the C library with domain checks).
double gamma_fn(double x);

/// The three time kernels of the series solutions at one (lambda, t).
struct TimeKernelTriple {
  double e1;      // E_{alpha,1}(-lambda t^alpha)
  double e2t;     // t E_{alpha,2}(-lambda t^alpha)
  double e_conv;  // t^(alpha-1) E_{alpha,alpha}(-lambda t^alpha); +inf at t=0 for alpha<1
};

/// Bundles the evaluators needed for one order alpha in (0,2).
class TimeKernels {
 public:
  explicit TimeKernels(double alpha);

  TimeKernelTriple operator()(double lambda, double t) const;
  double e1(double lambda, double t) const;
  double e2t(double lambda, double t) const;
  double e_conv(double lambda, double t) const;

  double alpha() const { return alpha_; }
  const MittagLeffler& ml_alpha_1() const { return e_a1_; }
  const MittagLeffler& ml_alpha_2() const { return e_a2_; }
  const MittagLeffler& ml_alpha_alpha() const { return e_aa_; }

 private:
  double alpha_;
  MittagLeffler e_a1_;
  MittagLeffler e_a2_;
  MittagLeffler e_aa_;
};

/// Free-function form of TimeKernels for one-off evaluations.
TimeKernelTriple time_kernels(double alpha, double lambda, double t);

}  // namespace fdw
