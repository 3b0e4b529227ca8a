#pragma once

// Reference computations used by the tests. Deliberately written without
// calling into the library's own numerics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Richardson-extrapolated central differences (O(h^4)).
inline double derivative(const std::function<double(double)>& f, double x) {
  const double h = 1e-3 * std::max(std::abs(x), 1e-2);
  auto d = [&](double hh) { return (f(x + hh) - f(x - hh)) / (2.0 * hh); };
  return (4.0 * d(h / 2) - d(h)) / 3.0;
}

inline double second_derivative(const std::function<double(double)>& f, double x) {
  const double h = 1e-2 * std::max(std::abs(x), 1e-2);
  auto d2 = [&](double hh) { return (f(x + hh) - 2.0 * f(x) + f(x - hh)) / (hh * hh); };
  return (4.0 * d2(h / 2) - d2(h)) / 3.0;
}

inline double partial(const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& s, Eigen::Index i) {
  return derivative(
      [&](double x) {
        Eigen::VectorXd t = s;
        t(i) = x;
        return f(t);
      },
      s(i));
}

inline double second_partial(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& s, Eigen::Index i, Eigen::Index j) {
  if (i == j) {
    return second_derivative(
        [&](double x) {
          Eigen::VectorXd t = s;
          t(i) = x;
          return f(t);
        },
        s(i));
  }
  return derivative(
      [&](double y) {
        Eigen::VectorXd t = s;
        t(j) = y;
        return partial(f, t, i);
      },
      s(j));
}

// Gaussian elimination with partial pivoting.
inline Eigen::VectorXd dense_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (a(piv, c) == 0.0) throw std::runtime_error("dense_solve: singular");
    a.row(c).swap(a.row(piv));
    std::swap(b(c), b(piv));
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double m = a(r, c) / a(c, c);
      for (Eigen::Index k = c; k < n; ++k) a(r, k) -= m * a(c, k);
      b(r) -= m * b(c);
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double s = b(r);
    for (Eigen::Index k = r + 1; k < n; ++k) s -= a(r, k) * x(k);
    x(r) = s / a(r, r);
  }
  return x;
}

// psi(p) for a Dirac comb, written out term by term.
inline double psi(const std::vector<std::pair<double, double>>& atoms, double p) {
  double s = 0.0;
  for (auto [z, lambda] : atoms) {
    s += lambda * ((std::exp(p * z) - 1.0) - p * (std::exp(z) - 1.0));
  }
  return s;
}

// E[exp(-u int_0^tau v ds) | v_0] for dv = kappa (theta - v) dt + xi sqrt(v) dB.
// Negative u is allowed while kappa^2 + 2 xi^2 u > 0.
inline double cir_laplace(double u, double v0, double kappa, double theta, double xi,
                          double tau) {
  const double g = std::sqrt(kappa * kappa + 2.0 * xi * xi * u);
  const double e = std::exp(g * tau);
  const double den = (g + kappa) * (e - 1.0) + 2.0 * g;
  const double B = 2.0 * u * (e - 1.0) / den;
  const double A = std::pow(2.0 * g * std::exp(0.5 * (kappa + g) * tau) / den,
                            2.0 * kappa * theta / (xi * xi));
  return A * std::exp(-B * v0);
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double std_error(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

}  // namespace oracle
