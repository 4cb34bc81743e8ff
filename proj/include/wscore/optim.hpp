#ifndef WSCORE_OPTIM_HPP
#define WSCORE_OPTIM_HPP

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace wscore {

struct BfgsOptions {
  int max_iter = 500;
  double grad_tol = 1e-5;
  double value_tol = 1e-12;
  double fd_step = 1e-6;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Central difference gradient with step h * max(1, |x_k|).
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size()), xp = x, xm = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(x[k]));
    xp[k] = x[k] + step;
    xm[k] = x[k] - step;
    g[k] = (f(xp) - f(xm)) / (2.0 * step);
    xp[k] = xm[k] = x[k];
  }
  return g;
}

/// Central difference Hessian from function values.
inline Eigen::MatrixXd numeric_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                       const Eigen::VectorXd& x, double h = 1e-4) {
  const auto n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd step(n);
  for (Eigen::Index k = 0; k < n; ++k) step[k] = h * std::max(1.0, std::abs(x[k]));
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += step[i];
    b[i] -= step[i];
    H(i, i) = (f(a) - 2.0 * f0 + f(b)) / (step[i] * step[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += step[i]; pp[j] += step[j];
      pm[i] += step[i]; pm[j] -= step[j];
      mp[i] -= step[i]; mp[j] += step[j];
      mm[i] -= step[i]; mm[j] -= step[j];
      H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step[i] * step[j]);
    }
  }
  return H;
}

/// Minimizes f by BFGS with finite-difference gradients and backtracking line search.
inline BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                const BfgsOptions& opt = {}) {
  const auto n = x.size();
  BfgsResult res;
  double fx = f(x);
  Eigen::VectorXd g = numeric_gradient(f, x, opt.fd_step);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    res.iterations = iter;
    if (g.cwiseAbs().maxCoeff() <= opt.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -Hinv * g;
    if (dir.dot(g) >= 0.0) {
      Hinv.setIdentity();
      dir = -g;
    }
    double t = 1.0, fn = fx;
    Eigen::VectorXd xn = x;
    bool moved = false;
    for (int h = 0; h < 50; ++h, t *= 0.5) {
      xn = x + t * dir;
      fn = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * g.dot(dir)) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    const Eigen::VectorXd gn = numeric_gradient(f, xn, opt.fd_step);
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    const double drop = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (drop >= 0.0 && drop <= opt.value_tol * (1.0 + std::abs(fx)) && g.cwiseAbs().maxCoeff() <= 100 * opt.grad_tol) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace wscore

#endif  // WSCORE_OPTIM_HPP
