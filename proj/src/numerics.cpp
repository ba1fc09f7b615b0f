#include "fdw/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdw/errors.hpp"

namespace fdw {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / (n - 1);
  out.back() = b;
  return out;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("logspace needs positive endpoints");
  std::vector<double> out = linspace(std::log(a), std::log(b), n);
  for (double& v : out) v = std::exp(v);
  if (n > 0) {
    out.front() = a;
    out.back() = b;
  }
  return out;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size()) throw UsageError("spline: knot and value arrays differ in length");
  if (n < 2) throw UsageError("spline: need at least two knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw UsageError("spline: knots must be strictly increasing");
  }
  const std::size_t m = n - 1;  // pieces
  std::vector<double> h(m), delta(m);
  for (std::size_t i = 0; i < m; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  std::vector<double> sd(n, 0.0);  // second derivatives at knots
  if (n == 3) {
    // single parabola through the three points
    const double c2 = (delta[1] - delta[0]) / (h[0] + h[1]);
    std::fill(sd.begin(), sd.end(), 2.0 * c2);
  } else if (n >= 4) {
    // unknowns sd[1..n-2]; sd[0] and sd[n-1] eliminated via not-a-knot
    const std::size_t k = n - 2;
    std::vector<double> lo(k, 0.0), di(k, 0.0), up(k, 0.0), rhs(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t i = j + 1;
      lo[j] = h[i - 1];
      di[j] = 2.0 * (h[i - 1] + h[i]);
      up[j] = h[i];
      rhs[j] = 6.0 * (delta[i] - delta[i - 1]);
    }
    const double h0 = h[0], h1 = h[1];
    di[0] += h0 * (h0 + h1) / h1;
    up[0] -= h0 * h0 / h1;
    const double ha = h[m - 2], hb = h[m - 1];
    di[k - 1] += hb * (ha + hb) / ha;
    lo[k - 1] -= hb * hb / ha;
    if (k == 1) {
      sd[1] = rhs[0] / di[0];
    } else {
      for (std::size_t j = 1; j < k; ++j) {
        const double w = lo[j] / di[j - 1];
        di[j] -= w * up[j - 1];
        rhs[j] -= w * rhs[j - 1];
      }
      sd[k] = rhs[k - 1] / di[k - 1];
      for (std::size_t j = k - 1; j-- > 0;) sd[j + 1] = (rhs[j] - up[j] * sd[j + 2]) / di[j];
    }
    sd[0] = ((h0 + h1) * sd[1] - h0 * sd[2]) / h1;
    sd[n - 1] = ((ha + hb) * sd[n - 2] - hb * sd[n - 3]) / ha;
  }
  b_.resize(m);
  c_.resize(m);
  d_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    b_[i] = delta[i] - h[i] * (2.0 * sd[i] + sd[i + 1]) / 6.0;
    c_[i] = 0.5 * sd[i];
    d_[i] = (sd[i + 1] - sd[i]) / (6.0 * h[i]);
  }
  cumulative_.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) cumulative_[i + 1] = cumulative_[i] + primitive(i, x_[i + 1]);

  const double step = (x_.back() - x_.front()) / m;
  uniform_ = true;
  for (std::size_t i = 0; i < m && uniform_; ++i) {
    if (std::abs(h[i] - step) > 1e-12 * step) uniform_ = false;
  }
  inv_step_ = 1.0 / step;
}

std::size_t CubicSpline::locate(double x) const {
  const std::size_t m = x_.size() - 1;
  if (uniform_) {
    const double pos = (x - x_.front()) * inv_step_;
    if (pos <= 0.0) return 0;
    const auto i = static_cast<std::size_t>(pos);
    return std::min(i, m - 1);
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.begin()) return 0;
  return std::min(static_cast<std::size_t>(it - x_.begin()) - 1, m - 1);
}

double CubicSpline::operator()(double x) const {
  const std::size_t i = locate(x);
  const double t = x - x_[i];
  return y_[i] + t * (b_[i] + t * (c_[i] + t * d_[i]));
}

double CubicSpline::derivative(double x) const {
  const std::size_t i = locate(x);
  const double t = x - x_[i];
  return b_[i] + t * (2.0 * c_[i] + 3.0 * t * d_[i]);
}

double CubicSpline::second_derivative(double x) const {
  const std::size_t i = locate(x);
  return 2.0 * c_[i] + 6.0 * d_[i] * (x - x_[i]);
}

double CubicSpline::primitive(std::size_t i, double x) const {
  const double t = x - x_[i];
  return t * (y_[i] + t * (b_[i] / 2.0 + t * (c_[i] / 3.0 + t * d_[i] / 4.0)));
}

double CubicSpline::integral(double a, double b) const {
  auto from_start = [this](double x) {
    const std::size_t i = locate(x);
    return cumulative_[i] + primitive(i, x);
  };
  return from_start(b) - from_start(a);
}

GaussRule gauss_legendre(int n) {
  if (n < 1) throw UsageError("gauss_legendre: need at least one node");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 2.0;
    return rule;
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

GaussRule composite_gauss(std::span<const double> breaks, int points) {
  const GaussRule base = gauss_legendre(points);
  GaussRule rule;
  if (breaks.size() < 2) return rule;
  rule.nodes.reserve((breaks.size() - 1) * points);
  rule.weights.reserve((breaks.size() - 1) * points);
  for (std::size_t c = 0; c + 1 < breaks.size(); ++c) {
    const double mid = 0.5 * (breaks[c] + breaks[c + 1]);
    const double half = 0.5 * (breaks[c + 1] - breaks[c]);
    for (int k = 0; k < points; ++k) {
      rule.nodes.push_back(mid + half * base.nodes[k]);
      rule.weights.push_back(half * base.weights[k]);
    }
  }
  return rule;
}

GaussRule composite_gauss(double a, double b, int cells, int points) {
  const std::vector<double> breaks = linspace(a, b, static_cast<std::size_t>(cells) + 1);
  return composite_gauss(std::span<const double>(breaks), points);
}

std::vector<double> gregory_weights(std::size_t n, double step) {
  std::vector<double> w(n, 1.0);
  switch (n) {
    case 0: return w;
    case 1: w[0] = 0.0; return w;
    case 2: w = {0.5, 0.5}; break;
    case 3: w = {1.0 / 3, 4.0 / 3, 1.0 / 3}; break;
    case 4: w = {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8}; break;
    case 5: w = {14.0 / 45, 64.0 / 45, 24.0 / 45, 64.0 / 45, 14.0 / 45}; break;
    default: {
      const double ends[3] = {3.0 / 8, 7.0 / 6, 23.0 / 24};
      for (int i = 0; i < 3; ++i) {
        w[i] = ends[i];
        w[n - 1 - i] = ends[i];
      }
    }
  }
  for (double& v : w) v *= step;
  return w;
}

std::vector<double> differentiate_uniform(std::span<const double> f, double step) {
  const std::size_t n = f.size();
  if (n < 5) throw UsageError("differentiate_uniform: need at least five samples");
  std::vector<double> d(n);
  const double s = 1.0 / (12.0 * step);
  d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) * s;
  d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) * s;
  for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) * s;
  const std::size_t e = n - 1;
  d[e] = (25 * f[e] - 48 * f[e - 1] + 36 * f[e - 2] - 16 * f[e - 3] + 3 * f[e - 4]) * s;
  d[e - 1] = (3 * f[e] + 10 * f[e - 1] - 18 * f[e - 2] + 6 * f[e - 3] - f[e - 4]) * s;
  return d;
}

}  // namespace fdw
