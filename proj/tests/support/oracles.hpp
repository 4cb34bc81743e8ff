#ifndef WSCORE_TEST_ORACLES_HPP
#define WSCORE_TEST_ORACLES_HPP

// Reference computations that share no code path with the library kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

namespace oracle {

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double clip(double v, double lim = 9.0) { return std::max(-lim, std::min(lim, v)); }

inline double adaptive(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  if (!(a < b)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

/// Bivariate normal density written out directly.
inline double bvn_density(double x, double y, double rho) {
  const double om = 1.0 - rho * rho;
  return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * om)) / (2.0 * std::numbers::pi * std::sqrt(om));
}

/// P(a1 < X < b1, a2 < Y < b2) by nested two-dimensional adaptive quadrature of the density.
inline double bvn_rect_quadrature(double a1, double b1, double a2, double b2, double rho) {
  a1 = clip(a1);
  b1 = clip(b1);
  a2 = clip(a2);
  b2 = clip(b2);
  auto outer = [&](double x) {
    // The conditional of Y given X = x is centred at rho x; split there so the
    // inner rule sees the peak.
    auto inner = [&](double y) { return bvn_density(x, y, rho); };
    const double c = std::max(a2, std::min(b2, rho * x));
    return adaptive(inner, a2, c, 1e-13) + adaptive(inner, c, b2, 1e-13);
  };
  return adaptive(outer, a1, std::max(a1, std::min(b1, 0.0)), 1e-12) +
         adaptive(outer, std::max(a1, std::min(b1, 0.0)), b1, 1e-12);
}

/// Trivariate normal box probability by one-dimensional quadrature over x of
/// the bivariate conditional box, itself by nested quadrature.
inline double tvn_rect_quadrature(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Eigen::Matrix3d& r) {
  auto outer = [&](double x) {
    const double s1 = std::sqrt(1.0 - r(0, 1) * r(0, 1)), s2 = std::sqrt(1.0 - r(0, 2) * r(0, 2));
    const double rc = (r(1, 2) - r(0, 1) * r(0, 2)) / (s1 * s2);
    return phi(x) * bvn_rect_quadrature((lo[1] - r(0, 1) * x) / s1, (hi[1] - r(0, 1) * x) / s1,
                                        (lo[2] - r(0, 2) * x) / s2, (hi[2] - r(0, 2) * x) / s2, rc);
  };
  return adaptive(outer, clip(lo[0]), clip(hi[0]), 1e-10);
}

/// Central finite difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  const double step = h * std::max(1.0, std::abs(x));
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

/// Logistic regression by iteratively reweighted least squares.
/// Returns coefficients of P(Z = 1 | w) = 1 / (1 + exp(-w'b)).
inline Eigen::VectorXd logistic_irls(const Eigen::MatrixXd& W, const Eigen::VectorXd& z) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(W.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = W * b;
    const Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
    const Eigen::MatrixXd XtWX = W.transpose() * w.asDiagonal() * W;
    const Eigen::VectorXd step = XtWX.ldlt().solve(W.transpose() * (z - mu));
    b += step;
    if (step.cwiseAbs().maxCoeff() < 1e-13) break;
  }
  return b;
}

namespace detail {
inline long long merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = (lo + hi) / 2;
  long long inv = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<long long>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
  return inv;
}
}  // namespace detail

/// Empirical Kendall tau of continuous data by counting discordant pairs with merge sort.
inline double kendall_tau(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto n = static_cast<std::size_t>(a.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x] < a[y]; });
  std::vector<double> v(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = b[order[i]];
  const double discordant = static_cast<double>(detail::merge_count(v, tmp, 0, n));
  return 1.0 - 4.0 * discordant / (static_cast<double>(n) * (n - 1));
}

/// Kolmogorov-Smirnov statistic against the uniform distribution.
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  return d;
}

}  // namespace oracle

#endif  // WSCORE_TEST_ORACLES_HPP
