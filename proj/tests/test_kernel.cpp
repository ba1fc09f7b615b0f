#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fdw/errors.hpp"
#include "fdw/kernel.hpp"

using namespace fdw;

namespace {

constexpr double kPi = std::numbers::pi;

Potential bump() {
  return Potential::from_function([](double x) { return 1.0 + 0.5 * std::sin(kPi * x) + 0.3 * x * x; }, 64);
}
Potential wave() {
  return Potential::from_function([](double x) { return 1.5 + std::cos(3.0 * x) + x; }, 64);
}

std::vector<double> grid(int m) { return linspace(0.0, 1.0, static_cast<std::size_t>(m) + 1); }

double max_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double max_kernel_gap(const Kernel& a, const Kernel& b) {
  const int ratio = b.mesh() / a.mesh();
  double worst = 0.0;
  for (int i = 0; i <= a.mesh(); ++i)
    for (int k = 0; k <= i; ++k) worst = std::max(worst, std::abs(a(i, k) - b(ratio * i, ratio * k)));
  return worst;
}

}  // namespace

TEST(Goursat, CoincidingSystemsGiveZeroKernel) {
  const Potential p = bump();
  const Kernel k = solve_goursat(p, 0.7, p, 0.7, 64);
  for (int i = 0; i <= 64; ++i)
    for (int j = 0; j <= i; ++j) ASSERT_EQ(k(i, j), 0.0);
  for (double v : k.dx_end()) EXPECT_EQ(v, 0.0);
}

TEST(Goursat, ZeroPotentialsMatchClosedForm) {
  // For p = q = 0, K = (j - h) exp(-h (x - y)) solves the wave equation, the
  // diagonal condition and K_y(x,0) = h K(x,0).
  const double h = 1.0, j = 2.0;
  const Kernel k = solve_goursat(Potential::zero(), h, Potential::zero(), j, 128);
  double worst = 0.0, worst_dx = 0.0;
  for (int i = 0; i <= 128; ++i) {
    EXPECT_NEAR(k(i, i), 1.0, 1e-14);
    for (int m = 0; m <= i; ++m) {
      const double x = i / 128.0, y = m / 128.0;
      worst = std::max(worst, std::abs(k(i, m) - (j - h) * std::exp(-h * (x - y))));
    }
  }
  for (int m = 0; m <= 128; ++m) {
    worst_dx = std::max(worst_dx, std::abs(k.dx_end()[m] + h * (j - h) * std::exp(-h * (1.0 - m / 128.0))));
  }
  EXPECT_LT(worst, 1e-10);
  EXPECT_LT(worst_dx, 1e-10);

  const Kernel fine = solve_goursat(Potential::zero(), h, Potential::zero(), j, 512);
  EXPECT_LT(max_kernel_gap(k, fine), 1e-10);
}

TEST(Goursat, ConstantPotentialGap) {
  // p = 1, q = 0, h = j: K(x,x) = 1/2 int (q - p) = -x/2.
  const Kernel k = solve_goursat(Potential::constant(1.0), 0.4, Potential::zero(), 0.4, 64);
  for (int i = 0; i <= 64; ++i) EXPECT_NEAR(k(i, i), -0.5 * i / 64.0, 1e-13);
}

TEST(Goursat, ResidualsOnMesh128) {
  const Kernel k = solve_goursat(bump(), 0.5, wave(), 1.2, 128);
  EXPECT_LE(diagonal_residual(k), 1e-8);
  EXPECT_LE(goursat_residual(k), 1e-6);
  EXPECT_LE(boundary_residual(k), 1e-6);
}

TEST(Goursat, MeshConvergence) {
  const Potential p = bump(), q = wave();
  const Kernel ref = solve_goursat(p, 0.5, q, 1.2, 512);
  double previous = 0.0;
  for (int m : {16, 32, 64, 128}) {
    const double err = max_kernel_gap(solve_goursat(p, 0.5, q, 1.2, m), ref);
    if (previous > 0.0) EXPECT_GE(previous / err, 3.0) << "mesh " << m;
    previous = err;
  }
  EXPECT_LT(previous, 1e-9);
}

TEST(Goursat, PicardAgreesWithMarching) {
  const Potential p = bump(), q = wave();
  GoursatOptions picard;
  picard.method = GoursatMethod::picard;
  for (bool richardson : {false, true}) {
    picard.richardson = richardson;
    GoursatOptions march;
    march.richardson = richardson;
    const Kernel a = solve_goursat(p, 0.5, q, 1.2, 64, march);
    const Kernel b = solve_goursat(p, 0.5, q, 1.2, 64, picard);
    EXPECT_LT(max_kernel_gap(a, b), 1e-7);
    EXPECT_LT(max_diff(a.dx_end(), b.dx_end()), 1e-7);
  }
}

TEST(Goursat, PicardReportsNonConvergence) {
  GoursatOptions opts;
  opts.method = GoursatMethod::picard;
  opts.max_iterations = 2;
  try {
    solve_goursat(bump(), 0.5, wave(), 1.2, 32, opts);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("2 iterations"), std::string::npos);
  }
}

TEST(Goursat, Validation) {
  EXPECT_THROW(solve_goursat(bump(), 0.5, wave(), 1.2, 8), DomainError);
  EXPECT_THROW(solve_goursat(bump(), std::nan(""), wave(), 1.2, 32), DomainError);
}

TEST(Transform, ZeroKernelIsIdentity) {
  const Potential p = bump();
  const Kernel k = solve_goursat(p, 0.3, p, 0.3, 32);
  const auto phi = sample_ivp(p, 0.3, 17.0, grid(32)).phi;
  EXPECT_EQ(transform(k, phi), phi);
}

TEST(Transform, LinearSolutionsAtZeroLambda) {
  const double h = 0.8, j = -0.4;
  const Kernel k = solve_goursat(Potential::zero(), h, Potential::zero(), j, 128);
  const auto x = grid(128);
  std::vector<double> phi(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) phi[i] = 1.0 + h * x[i];
  const auto psi = transform(k, phi);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(psi[i], 1.0 + j * x[i], 1e-9);
}

TEST(Transform, MatchesDirectIntegration) {
  const auto x = grid(128);
  {
    const Kernel k = solve_goursat(Potential::zero(), 1.0, Potential::zero(), 2.0, 128);
    const double lambda = kPi * kPi;
    const auto phi = sample_ivp(Potential::zero(), 1.0, lambda, x).phi;
    const auto direct = sample_ivp(Potential::zero(), 2.0, lambda, x).phi;
    EXPECT_LE(max_diff(transform(k, phi), direct), 1e-6);
  }
  const Potential p = bump(), q = wave();
  const Kernel k = solve_goursat(p, 0.5, q, 1.2, 128);
  std::mt19937_64 rng(20261019);
  std::uniform_real_distribution<double> pick(0.0, 200.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double lambda = pick(rng);
    const auto phi = sample_ivp(p, 0.5, lambda, x).phi;
    const auto direct = sample_ivp(q, 1.2, lambda, x).phi;
    EXPECT_LE(max_diff(transform(k, phi), direct), 1e-6) << "lambda " << lambda;
  }
}

TEST(Transform, GridMismatch) {
  const Kernel k = solve_goursat(bump(), 0.5, wave(), 1.2, 32);
  EXPECT_THROW(transform(k, std::vector<double>(20, 1.0)), UsageError);
}

TEST(Endpoint, IdenticalSystemsVanish) {
  const Potential p = bump();
  const Kernel k = solve_goursat(p, 0.5, p, 0.5, 64);
  const Spectrum spec = eigensystem(p, {0.5, 1.1}, 8, {64});
  EXPECT_LE(endpoint_identities(k, spec, 1.1, 1.1).max_abs(), 1e-8);
}

TEST(Endpoint, RobinMismatchJump) {
  const Potential p = bump();
  const Kernel k = solve_goursat(p, 1.0, p, 1.5, 64);
  const Spectrum spec = eigensystem(p, {1.0, 0.9}, 4, {64});
  EXPECT_NEAR(std::abs(endpoint_identities(k, spec, 0.9, 0.9).jump), 0.5, 1e-12);
}

TEST(Endpoint, MomentsMatchShootingOracle) {
  // psi(1) - phi(1) = int K(1,y) phi dy and, for an eigenfunction of the
  // (p, h, H) system, psi'(1) + J psi(1) = flux moment + J * moment.
  const Potential p = Potential::zero();
  const Potential q = Potential::from_function([](double x) { return x; }, 64);
  const double h = 0.6, H = 1.3, J = 1.3;
  const Kernel k = solve_goursat(p, h, q, h, 128);
  const Spectrum spec = eigensystem(p, {h, H}, 6, {128});
  const auto report = endpoint_identities(k, spec, H, J);
  EXPECT_GT(std::abs(report.moment[0]), 1e-3);
  for (std::size_t n = 0; n < spec.size(); ++n) {
    const auto phi = shoot(p, h, spec.lambdas[n]);
    const auto psi = shoot(q, h, spec.lambdas[n]);
    const double moment = psi.phi - phi.phi;
    EXPECT_NEAR(report.moment[n], moment, 1e-8) << n;
    EXPECT_NEAR(report.flux_moment[n], psi.dphi + J * psi.phi - J * moment, 1e-7) << n;
  }
}

TEST(Reconstruct, ZeroKernelGivesEqualParameters) {
  const Potential p = bump();
  const Kernel k = solve_goursat(p, 0.5, p, 0.5, 64);
  const auto r = reconstruct_params_from_kernel(k, 1.7);
  EXPECT_EQ(r.J, 1.7);
  EXPECT_EQ(r.j, 0.5);
  for (double v : r.q_minus_p) EXPECT_EQ(v, 0.0);
}

TEST(Reconstruct, LinearDiagonal) {
  const Kernel k = solve_goursat(Potential::constant(1.0), 0.4, Potential::zero(), 0.4, 64);
  const auto r = reconstruct_params_from_kernel(k, 1.0);
  for (double v : r.q_minus_p) EXPECT_NEAR(v, -1.0, 1e-10);
  EXPECT_NEAR(r.j, 0.4, 1e-14);
}

TEST(Reconstruct, SmoothGroundTruth) {
  const Potential p = bump(), q = wave();
  const double h = 0.5, j = 1.2, H = 0.8;
  const Kernel k = solve_goursat(p, h, q, j, 128);
  const auto r = reconstruct_params_from_kernel(k, H);
  const auto x = grid(128);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(r.q_minus_p[i] - (q(x[i]) - p(x[i]))));
  EXPECT_LE(worst, 1e-4);
  EXPECT_NEAR(r.j, j, 1e-12);
  EXPECT_NEAR(r.J, H - k(128, 128), 1e-15);
}

TEST(Reconstruct, NoisyDiagonalRefused) {
  Kernel k(64, Potential::zero(), 0.0, Potential::zero(), 0.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int i = 0; i <= 64; ++i) k.at(i, i) = 0.1 * i / 64.0 + noise(rng);
  EXPECT_THROW(reconstruct_params_from_kernel(k, 1.0), NumericalError);
}
