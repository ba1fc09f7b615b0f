#pragma once

#include <span>
#include <vector>

#include "fdw/sturm_liouville.hpp"

namespace fdw {

/// Transformation kernel K(x,y) on 0 <= y <= x <= 1, connecting the system
/// (p, h) to the system (q, j): psi = phi + int_0^x K(x,y) phi(y) dy.
/// Nodes are x_i = i/M, y_k = k/M, k <= i.
class Kernel {
 public:
  Kernel(int mesh, Potential p, double h, Potential q, double j);

  int mesh() const { return mesh_; }
  double step() const { return 1.0 / mesh_; }
  double operator()(int i, int k) const { return values_[index(i, k)]; }
  double& at(int i, int k) { return values_[index(i, k)]; }

  std::vector<double> diagonal() const;
  std::vector<double> row(int i) const;  // K(x_i, y_k), k = 0..i
  /// d/dx K at x = 1, y_k = k/M.
  const std::vector<double>& dx_end() const { return dx_end_; }
  std::vector<double>& dx_end() { return dx_end_; }

  const Potential& p() const { return p_; }
  const Potential& q() const { return q_; }
  double h() const { return h_; }
  double j() const { return j_; }

  /// Expected diagonal j - h + 1/2 int_0^x (q - p).
  double diagonal_data(double x) const;

 private:
  static std::size_t index(int i, int k) {
    return static_cast<std::size_t>(i) * (i + 1) / 2 + static_cast<std::size_t>(k);
  }

  int mesh_;
  Potential p_, q_;
  double h_, j_;
  std::vector<double> values_;
  std::vector<double> dx_end_;
};

enum class GoursatMethod { marching, picard };

struct GoursatOptions {
  GoursatMethod method = GoursatMethod::marching;
  bool richardson = true;  // combine meshes M and 2M
  int max_iterations = 500;
  double tolerance = 1e-15;  // Picard stopping rule, relative to max |K|
};

/// Solves K_xx - K_yy = (q(x) - p(y)) K, K_y(x,0) = h K(x,0) with the
/// diagonal data above. Requires mesh >= 16.
Kernel solve_goursat(const Potential& p, double h, const Potential& q, double j, int mesh,
                     GoursatOptions options = {});

/// psi(x_i) = phi(x_i) + int_0^{x_i} K(x_i, y) phi(y) dy for samples on the
/// kernel grid.
std::vector<double> transform(const Kernel& kernel, std::span<const double> phi);

/// Largest deviation of K(x,x) from the diagonal data.
double diagonal_residual(const Kernel& kernel);
/// Largest |K_y(x,0) - h K(x,0)| (fourth-order one-sided differences).
double boundary_residual(const Kernel& kernel);
/// Largest |K_xx - K_yy - (q(x) - p(y)) K| over interior nodes (fourth-order
/// central differences, two nodes away from the edges).
double goursat_residual(const Kernel& kernel);

struct EndpointReport {
  double jump = 0.0;                  // J - H + K(1,1)
  std::vector<double> moment;         // int_0^1 K(1,y) phi_n(y) dy
  std::vector<double> flux_moment;    // jump phi_n(1) + int_0^1 K_x(1,y) phi_n(y) dy
  double max_abs() const;
};

/// Endpoint identities against the eigenfunctions of the (p, h, H) system.
EndpointReport endpoint_identities(const Kernel& kernel, const Spectrum& spec_p, double H, double J);

struct KernelParameters {
  double J;                        // right Robin coefficient of the (q, j) system
  double j;                        // left Robin coefficient of the (q, j) system
  std::vector<double> q_minus_p;  // on the kernel grid
};

/// J = H - K(1,1), j = h + K(0,0), q - p = 2 d/dx K(x,x).
KernelParameters reconstruct_params_from_kernel(const Kernel& kernel, double H);

}  // namespace fdw
