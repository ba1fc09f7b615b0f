#include "fdw/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "fdw/errors.hpp"

namespace fdw {

namespace {

// Solution on the characteristic lattice xi = a s, eta = b s (s = 1/M),
// 0 <= b <= a, a + b <= 2M, where x = (xi + eta)/2 and y = (xi - eta)/2.
// With u(xi, eta) = K(x, y) the equation reads 4 u_{xi eta} = (q(x) - p(y)) u.
class Lattice {
 public:
  Lattice(const Kernel& shape, int mesh) : m_(mesh), s_(1.0 / mesh) {
    const int top = 2 * m_;
    cols_.resize(top + 1);
    for (int a = 0; a <= top; ++a) cols_[a].assign(std::min(a, top - a) + 1, 0.0);
    qv_.resize(top + 1);
    pv_.resize(top + 1);
    d_.resize(top + 1);
    dd_.resize(top + 1);
    for (int c = 0; c <= top; ++c) {
      const double x = 0.5 * c * s_;  // x = c s / 2
      qv_[c] = shape.q()(x);
      pv_[c] = shape.p()(x);
      d_[c] = shape.diagonal_data(x);
      dd_[c] = 0.25 * (qv_[c] - pv_[c]);
    }
    h_ = shape.h();
  }

  int top() const { return 2 * m_; }
  double& u(int a, int b) { return cols_[a][b]; }
  double u(int a, int b) const { return cols_[a][b]; }
  double coef(int a, int b) const { return qv_[a + b] - pv_[a - b]; }
  double f(int a, int b) const { return coef(a, b) * cols_[a][b]; }

  // Trapezoid of F over eta' in [0, b s] on column a.
  double column_trapezoid(int a, int b) const {
    if (b == 0) return 0.0;
    double sum = 0.5 * (f(a, 0) + f(a, b));
    for (int d = 1; d < b; ++d) sum += f(a, d);
    return s_ * sum;
  }
  // Trapezoid of F over xi' in [b s, a s] on row b.
  double row_trapezoid(int a, int b) const {
    if (a == b) return 0.0;
    double sum = 0.5 * (f(b, b) + f(a, b));
    for (int c = b + 1; c < a; ++c) sum += f(c, b);
    return s_ * sum;
  }
  // u_xi on the boundary eta = xi, i.e. K at y = 0, column a.
  double boundary_flux(int a) const { return dd_[a] + 0.25 * column_trapezoid(a, a); }

  void march() {
    const double c4 = s_ * s_ / 16.0;
    u(0, 0) = d_[0];
    double flux_prev = dd_[0];
    for (int a = 1; a <= top(); ++a) {
      u(a, 0) = d_[a];
      const int last = std::min(a - 1, top() - a);
      for (int b = 1; b <= last; ++b) {
        const double rhs = u(a, b - 1) + u(a - 1, b) - u(a - 1, b - 1) +
                           c4 * (f(a - 1, b - 1) + f(a, b - 1) + f(a - 1, b));
        u(a, b) = rhs / (1.0 - c4 * coef(a, b));
      }
      if (a <= m_) {
        // g' + h g = 2 u_xi along the boundary, trapezoid in both directions;
        // the unknown g_a enters the column trapezoid with weight s/2.
        double partial = dd_[a];
        if (a > 0) {
          double sum = 0.5 * f(a, 0);
          for (int d = 1; d < a; ++d) sum += f(a, d);
          partial += 0.25 * s_ * sum;
        }
        const double ca = coef(a, a);
        const double g_prev = u(a - 1, a - 1);
        const double g = (g_prev * (1.0 - 0.5 * s_ * h_) + s_ * (partial + flux_prev)) /
                         (1.0 + 0.5 * s_ * h_ - s_ * s_ * ca / 8.0);
        u(a, a) = g;
        flux_prev = boundary_flux(a);
      }
    }
  }

  int picard(int max_iterations, double tolerance) {
    const int top2 = top();
    Lattice next = *this;
    // Initial iterate: diagonal data only.
    for (int a = 0; a <= top2; ++a)
      for (std::size_t b = 0; b < cols_[a].size(); ++b) u(a, static_cast<int>(b)) = d_[a];
    std::vector<std::vector<double>> colsum(top2 + 1);
    for (int it = 1; it <= max_iterations; ++it) {
      // g from the trapezoid of the boundary equation with the old iterate.
      std::vector<double> flux(m_ + 1);
      for (int a = 0; a <= m_; ++a) flux[a] = boundary_flux(a);
      std::vector<double> g(m_ + 1);
      g[0] = d_[0];
      for (int a = 1; a <= m_; ++a) {
        g[a] = g[a - 1] + 0.5 * s_ *
                              ((2.0 * flux[a] - h_ * u(a, a)) + (2.0 * flux[a - 1] - h_ * u(a - 1, a - 1)));
      }
      // S_c(b) = sum_d m_d F(c, d) over d = 0..b with trapezoid multiplicities.
      for (int c = 0; c <= top2; ++c) {
        const int n = static_cast<int>(cols_[c].size());
        colsum[c].assign(n, 0.0);
        double run = 0.0;
        for (int b = 0; b < n; ++b) {
          run += f(c, b);
          colsum[c][b] = b == 0 ? 0.0 : 2.0 * run - f(c, 0) - f(c, b);
        }
      }
      const double c16 = s_ * s_ / 16.0;
      for (int b = 0; b <= m_; ++b) {
        // R(a, b) = 2 sum_{c=b}^{a} S_c(b) - S_b(b) - S_a(b)
        double run = 0.0;
        for (int a = b; a <= top2 - b; ++a) {
          run += colsum[a][b];
          const double rect = a == b ? 0.0 : 2.0 * run - colsum[b][b] - colsum[a][b];
          next.u(a, b) = d_[a] - d_[b] + g[b] + c16 * rect;
        }
      }
      double change = 0.0, scale = 1.0;
      for (int a = 0; a <= top2; ++a) {
        for (std::size_t b = 0; b < cols_[a].size(); ++b) {
          change = std::max(change, std::abs(next.cols_[a][b] - cols_[a][b]));
          scale = std::max(scale, std::abs(next.cols_[a][b]));
        }
      }
      cols_.swap(next.cols_);
      if (change <= tolerance * scale) return it;
    }
    std::ostringstream os;
    os << "Goursat Picard iteration did not converge in " << max_iterations << " iterations";
    throw NumericalError(os.str());
  }

  // K(x_i, y_k) with x_i = i/M.
  double k_at(int i, int k) const { return u(i + k, i - k); }

  // K_x(1, y_k) = u_xi + u_eta at a = M + k, b = M - k.
  double dx_end(int k) const {
    const int a = m_ + k, b = m_ - k;
    const double u_xi = dd_[a] + 0.25 * column_trapezoid(a, b);
    const double u_eta = boundary_flux(b) - h_ * u(b, b) + 0.25 * row_trapezoid(a, b);
    return u_xi + u_eta;
  }

 private:
  int m_;
  double s_;
  double h_ = 0.0;
  std::vector<std::vector<double>> cols_;
  std::vector<double> qv_, pv_, d_, dd_;
};

Lattice solve_lattice(const Kernel& shape, int mesh, const GoursatOptions& options) {
  Lattice lat(shape, mesh);
  if (options.method == GoursatMethod::marching) {
    lat.march();
  } else {
    lat.picard(options.max_iterations, options.tolerance);
  }
  return lat;
}

}  // namespace

Kernel::Kernel(int mesh, Potential p, double h, Potential q, double j)
    : mesh_(mesh), p_(std::move(p)), q_(std::move(q)), h_(h), j_(j) {
  if (mesh < 1) throw DomainError("kernel mesh must be positive");
  values_.assign(index(mesh, mesh) + 1, 0.0);
  dx_end_.assign(mesh + 1, 0.0);
}

std::vector<double> Kernel::diagonal() const {
  std::vector<double> d(mesh_ + 1);
  for (int i = 0; i <= mesh_; ++i) d[i] = (*this)(i, i);
  return d;
}

std::vector<double> Kernel::row(int i) const {
  return {values_.begin() + static_cast<std::ptrdiff_t>(index(i, 0)),
          values_.begin() + static_cast<std::ptrdiff_t>(index(i, i)) + 1};
}

double Kernel::diagonal_data(double x) const {
  return j_ - h_ + 0.5 * (q_.integral(x) - p_.integral(x));
}

Kernel solve_goursat(const Potential& p, double h, const Potential& q, double j, int mesh,
                     GoursatOptions options) {
  if (mesh < 16) throw DomainError("Goursat mesh must be at least 16");
  if (!std::isfinite(h) || !std::isfinite(j)) throw DomainError("Robin coefficients must be finite");
  Kernel kernel(mesh, p, h, q, j);
  const Lattice coarse = solve_lattice(kernel, mesh, options);
  if (!options.richardson) {
    for (int i = 0; i <= mesh; ++i)
      for (int k = 0; k <= i; ++k) kernel.at(i, k) = coarse.k_at(i, k);
    for (int k = 0; k <= mesh; ++k) kernel.dx_end()[k] = coarse.dx_end(k);
    return kernel;
  }
  // The cell and boundary rules are symmetric trapezoid rules, so the error
  // expands in even powers of the step.
  const Lattice fine = solve_lattice(kernel, 2 * mesh, options);
  for (int i = 0; i <= mesh; ++i) {
    for (int k = 0; k <= i; ++k) kernel.at(i, k) = (4.0 * fine.k_at(2 * i, 2 * k) - coarse.k_at(i, k)) / 3.0;
  }
  for (int k = 0; k <= mesh; ++k) kernel.dx_end()[k] = (4.0 * fine.dx_end(2 * k) - coarse.dx_end(k)) / 3.0;
  return kernel;
}

std::vector<double> transform(const Kernel& kernel, std::span<const double> phi) {
  const int m = kernel.mesh();
  if (static_cast<int>(phi.size()) != m + 1) {
    std::ostringstream os;
    os << "transform: " << phi.size() << " samples for a kernel grid of " << m + 1 << " nodes";
    throw UsageError(os.str());
  }
  std::vector<double> psi(phi.begin(), phi.end());
  // Rows shorter than six nodes are too short for the Gregory rule. There K
  // is replaced by a total-degree-5 least-squares polynomial on the corner
  // nodes x_i <= 7 and integrated against a spline of phi.
  constexpr int kShort = 6, kCorner = 7, kDegree = 5;
  {
    std::vector<std::pair<int, int>> powers;
    for (int d = 0; d <= kDegree; ++d)
      for (int e = 0; e <= d; ++e) powers.emplace_back(d - e, e);
    const int rows = (kCorner + 1) * (kCorner + 2) / 2;
    Eigen::MatrixXd a(rows, static_cast<int>(powers.size()));
    Eigen::VectorXd b(rows);
    int r = 0;
    for (int i = 0; i <= kCorner; ++i) {
      for (int k = 0; k <= i; ++k, ++r) {
        for (std::size_t c = 0; c < powers.size(); ++c)
          a(r, static_cast<int>(c)) = std::pow(i, powers[c].first) * std::pow(k, powers[c].second);
        b(r) = kernel(i, k);
      }
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    const CubicSpline phi_s(linspace(0.0, 1.0, static_cast<std::size_t>(m) + 1), {phi.begin(), phi.end()});
    const GaussRule g = gauss_legendre(12);
    for (int i = 1; i < kShort; ++i) {
      const double x = i * kernel.step();
      double sum = 0.0;
      for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        const double t = 0.5 * i * (g.nodes[n] + 1.0);  // y / step
        double kv = 0.0;
        for (std::size_t c = 0; c < powers.size(); ++c)
          kv += coef(static_cast<int>(c)) * std::pow(i, powers[c].first) * std::pow(t, powers[c].second);
        sum += g.weights[n] * kv * phi_s(t * kernel.step());
      }
      psi[i] += 0.5 * x * sum;
    }
  }
  for (int i = kShort; i <= m; ++i) {
    const auto w = gregory_weights(static_cast<std::size_t>(i) + 1, kernel.step());
    double sum = 0.0;
    for (int k = 0; k <= i; ++k) sum += w[k] * kernel(i, k) * phi[k];
    psi[i] += sum;
  }
  return psi;
}

double diagonal_residual(const Kernel& kernel) {
  double worst = 0.0;
  for (int i = 0; i <= kernel.mesh(); ++i) {
    worst = std::max(worst, std::abs(kernel(i, i) - kernel.diagonal_data(i * kernel.step())));
  }
  return worst;
}

double boundary_residual(const Kernel& kernel) {
  const double s = kernel.step();
  double worst = 0.0;
  for (int i = 4; i <= kernel.mesh(); ++i) {
    const double ky = (-25 * kernel(i, 0) + 48 * kernel(i, 1) - 36 * kernel(i, 2) + 16 * kernel(i, 3) -
                       3 * kernel(i, 4)) /
                      (12.0 * s);
    worst = std::max(worst, std::abs(ky - kernel.h() * kernel(i, 0)));
  }
  return worst;
}

double goursat_residual(const Kernel& kernel) {
  const int m = kernel.mesh();
  const double s2 = kernel.step() * kernel.step();
  auto second = [&](double fm2, double fm1, double f0, double fp1, double fp2) {
    return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12.0 * s2);
  };
  double worst = 0.0;
  for (int i = 4; i + 2 <= m; ++i) {
    const double x = i * kernel.step();
    for (int k = 2; k + 2 <= i; ++k) {
      const double y = k * kernel.step();
      const double kxx = second(kernel(i - 2, k), kernel(i - 1, k), kernel(i, k), kernel(i + 1, k), kernel(i + 2, k));
      const double kyy = second(kernel(i, k - 2), kernel(i, k - 1), kernel(i, k), kernel(i, k + 1), kernel(i, k + 2));
      worst = std::max(worst, std::abs(kxx - kyy - (kernel.q()(x) - kernel.p()(y)) * kernel(i, k)));
    }
  }
  return worst;
}

double EndpointReport::max_abs() const {
  double worst = std::abs(jump);
  for (double v : moment) worst = std::max(worst, std::abs(v));
  for (double v : flux_moment) worst = std::max(worst, std::abs(v));
  return worst;
}

EndpointReport endpoint_identities(const Kernel& kernel, const Spectrum& spec_p, double H, double J) {
  const int m = kernel.mesh();
  std::vector<double> y(m + 1);
  for (int k = 0; k <= m; ++k) y[k] = k * kernel.step();
  const CubicSpline k_end(y, kernel.row(m));
  const CubicSpline kx_end(y, kernel.dx_end());
  EndpointReport report;
  report.jump = J - H + kernel(m, m);
  const auto& rule = spec_p.quadrature;
  for (std::size_t n = 0; n < spec_p.size(); ++n) {
    double a = 0.0, b = 0.0;
    for (std::size_t r = 0; r < rule.nodes.size(); ++r) {
      const double w = rule.weights[r] * spec_p.phis_gauss[n][r];
      a += w * k_end(rule.nodes[r]);
      b += w * kx_end(rule.nodes[r]);
    }
    report.moment.push_back(a);
    report.flux_moment.push_back(report.jump * spec_p.phi_end[n] + b);
  }
  return report;
}

KernelParameters reconstruct_params_from_kernel(const Kernel& kernel, double H) {
  const int m = kernel.mesh();
  const double s = kernel.step();
  const auto diag = kernel.diagonal();
  KernelParameters out;
  out.J = H - diag[m];
  out.j = kernel.h() + diag[0];
  out.q_minus_p = differentiate_uniform(diag, s);
  for (double& v : out.q_minus_p) v *= 2.0;
  // Differentiation amplifies noise: compare with the same stencil on every
  // other node and refuse when the two disagree beyond smooth-data levels.
  std::vector<double> half;
  for (int i = 0; i <= m; i += 2) half.push_back(diag[i]);
  if (half.size() >= 5) {
    const auto coarse = differentiate_uniform(half, 2.0 * s);
    double scale = 1.0, gap = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      scale = std::max(scale, std::abs(out.q_minus_p[2 * i]));
      gap = std::max(gap, std::abs(2.0 * coarse[i] - out.q_minus_p[2 * i]));
    }
    if (gap > 1e-2 * scale) {
      std::ostringstream os;
      os << "kernel diagonal too noisy to differentiate (mesh comparison gap " << gap << ")";
      throw NumericalError(os.str());
    }
  }
  return out;
}

}  // namespace fdw
