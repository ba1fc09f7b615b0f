#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdw/forward.hpp"

namespace fdw {

/// Order, eigenvalues and mode amplitudes fitted to boundary traces.
/// Left amplitudes are p_n (phi_n(0) = 1); right amplitudes are p_n phi_n(1).
struct SpectralFingerprint {
  double alpha = 0.0;
  std::vector<double> lambdas;
  std::vector<double> pn;
  std::optional<std::vector<double>> pn0;
  std::vector<double> right_pn;  // empty when the right endpoint was not fitted
  std::optional<std::vector<double>> right_pn0;
  double residual = 0.0;           // 2-norm of data minus model
  double relative_residual = 0.0;  // residual over the 2-norm of the data
  double condition = 0.0;          // condition number of the basis matrix
  bool ill_conditioned = false;
  bool failed = false;
  std::string diagnostic;
  std::vector<double> scan_alpha;     // multistart grid
  std::vector<double> scan_residual;  // best relative residual at each grid order

  std::size_t size() const { return lambdas.size(); }
  bool has_velocity() const { return pn0.has_value(); }
};

enum class FitEndpoints { left, both };

struct FitOptions {
  int modes = 5;  // at most 8
  double alpha_lo = 0.05;
  double alpha_hi = 1.95;
  double alpha_step = 0.05;
  FitEndpoints endpoints = FitEndpoints::both;
  double failure_threshold = 1e-2;  // relative residual above which the fit is flagged
  double lambda_min = 1e-2;         // eigenvalue scan for greedy mode addition
  double lambda_max = 1e4;
  int lambda_scan = 120;
  double condition_limit = 1e12;
};

/// Variable projection fit: amplitudes by linear least squares, (alpha,
/// lambda_1..lambda_N) by a multistart scan over alpha, Levenberg-Marquardt in
/// log lambda and Brent refinement of the profiled residual in alpha.
SpectralFingerprint fit_order_and_modes(const BoundaryTrace& trace, const FitOptions& options = {});

/// Same fit with the order held fixed. `start` seeds the eigenvalues; without
/// it modes are added greedily from a logarithmic scan.
SpectralFingerprint fit_modes_at_order(const BoundaryTrace& trace, double alpha, const FitOptions& options = {},
                                       std::span<const double> start = {});

/// Relative residual of the best fit at each trial order (all else re-optimized).
std::vector<double> order_profile(const BoundaryTrace& trace, std::span<const double> betas,
                                  const FitOptions& options = {});

/// Traces of the fitted model at the given times.
BoundaryTrace synthesize(const SpectralFingerprint& fp, std::span<const double> times);

/// Samples of z^(1-alpha) L[u](z) at z = xi^(1/alpha); for data of the model
/// class this equals sum p_n / (xi + lambda_n). The integral over the data
/// window uses a spline of the samples; the parts before the first and after
/// the last time come from `tail_model` when given and are dropped otherwise.
struct LaplaceSamples {
  std::vector<double> xi;
  std::vector<double> values;
  bool tail_bias_warning = false;  // truncated tail that had not decayed
};
LaplaceSamples laplace_trace(const BoundaryTrace& trace, double alpha, std::span<const double> xi_grid,
                             const SpectralFingerprint* tail_model = nullptr, bool right_endpoint = false);

/// Poles and residues of sum r_n / (xi + lambda_n) fitted to samples
/// (linearized rational least squares followed by a residue solve).
struct RationalFit {
  std::vector<double> lambdas;
  std::vector<double> residues;
  double residual = 0.0;
};
RationalFit rational_fit(std::span<const double> xi, std::span<const double> values, int poles);

struct OperatorFitOptions {
  int intervals = 64;  // grid of the recovered potential
  std::optional<std::vector<double>> start;  // cosine coefficients, then h, H
  double tolerance = 1e-10;                  // misfit treated as converged
  int max_evaluations = 4000;
};

struct OperatorRecovery {
  Potential potential = Potential::zero();
  RobinPair robin{1.0, 1.0};
  std::vector<double> coefficients;  // p = sum c_k cos(k pi x)
  double misfit = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

/// p (cosine basis of size basis_dim), h and H from the fitted eigenvalues and
/// the end values phi_n(1) = (right amplitude) / (left amplitude), where the
/// right amplitudes are projected from trace_right on the fitted modes.
OperatorRecovery recover_operator(const SpectralFingerprint& fp, const BoundaryTrace& trace_right, int basis_dim,
                                  const OperatorFitOptions& options = {});

/// a = sum p_n phi_n (and a0 from p_n^0) on the spectrum grid.
InitialData recover_initial(const SpectralFingerprint& fp, const Spectrum& spec);

struct DeconvolutionOptions {
  double noise_level = 0.0;  // relative noise of the source trace
  double safety = 1.2;       // discrepancy factor
  double floor = 1e-10;      // relative discretization level assumed for exact data
};

struct DeconvolutionResult {
  BoundaryTrace trace;
  double mu_left = 0.0;
  double mu_right = 0.0;
  bool ill_posed_warning = false;  // theta(0) small compared with max |theta|
};

/// Solves int_0^t theta(t-s) u(s) ds = J^gamma u_source(t) for u at each
/// endpoint (gamma = 1 - alpha, 0 or 2 - alpha). In the variable
/// xi = t^min(alpha, 1), where the traces are smooth, u is piecewise linear
/// and discontinuous, collocated at the Radau points xi_{k-1} + dxi/3 and
/// xi_k; the source trace is a cubic spline in xi vanishing at t = 0. A
/// first-difference Tikhonov penalty is chosen by the discrepancy principle.
class SourceDeconvolver {
 public:
  SourceDeconvolver(std::span<const double> times, const SourceSpec& source);
  DeconvolutionResult operator()(const BoundaryTrace& source_trace, double alpha,
                                 const DeconvolutionOptions& options = {}) const;

 private:
  std::vector<double> grid_;  // with t = 0 first
  CubicSpline theta_;
  bool weak_start_ = false;
};

DeconvolutionResult deconvolve_source(const BoundaryTrace& source_trace, const SourceSpec& source, double alpha,
                                      const DeconvolutionOptions& options = {});

/// Order recovery for source data: for each trial order beta the trace is
/// deconvolved with J^(1-beta) and fitted at order beta; the order with the
/// smallest relative residual is refined and the deconvolved trace refitted
/// with the order free.
struct SourceOrderRecovery {
  double profile_alpha = 0.0;
  SpectralFingerprint refit;
  BoundaryTrace deconvolved;
  std::vector<double> scan_alpha;
  std::vector<double> scan_residual;
};
SourceOrderRecovery recover_source_order(const BoundaryTrace& source_trace, const SourceSpec& source,
                                         const FitOptions& options = {},
                                         const DeconvolutionOptions& deconv = {});

/// Max over both endpoints and the grid of |trace_A - trace_B|, with both
/// traces synthesized from `modes` eigenmodes on a log grid of [1e-3 T, T].
double distinguishability(const ModelParams& a, const InitialData& data_a, const ModelParams& b,
                          const InitialData& data_b, double t_end, std::size_t t_count, int modes = 20);

/// True iff every n <= N has |p_n| + |p_n^0| >= tol in at least one set.
bool assumption_union_check(std::span<const ModeCoefficients> sets, int count, double tol);

}  // namespace fdw
