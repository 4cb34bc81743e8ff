#ifndef WSCORE_CL1_HPP
#define WSCORE_CL1_HPP

// Second stage of the CL1 method: latent correlations of the discretized
// normal working model from the bivariate composite log-likelihood L2, with
// the univariate parameters held at their stage-one estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

#include "wscore/correlation.hpp"
#include "wscore/dataset.hpp"
#include "wscore/error.hpp"
#include "wscore/gauss.hpp"
#include "wscore/margins.hpp"

namespace wscore {

/// Floor applied to observed pair probabilities before taking logs.
inline constexpr double kProbFloor = 1e-12;

inline Rect2 pair_rect(const std::vector<double>& zj, const std::vector<double>& zk, int yj, int yk, double rho) {
  return {zj[yj - 1], zj[yj], zk[yk - 1], zk[yk], rho};
}

/// f2(y_j, y_k): bivariate probability of the discretized normal pair.
inline double pair_prob(const UnivariateParams& params, const Link& link, const Eigen::Ref<const Eigen::VectorXd>& xj,
                        const Eigen::Ref<const Eigen::VectorXd>& xk, int yj, int yk, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("pair correlation must lie in (-1, 1)");
  const int k = params.categories();
  if (yj < 1 || yj > k || yk < 1 || yk > k) throw DomainError("category outside 1..K");
  const auto zj = normal_bounds(link, shifted_cutpoints(params, xj));
  const auto zk = normal_bounds(link, shifted_cutpoints(params, xk));
  return bvn_rect(pair_rect(zj, zk, yj, yk, rho));
}

struct PairwiseLik {
  double value = 0.0;
  /// Sum over clusters for each pair (j,k), in pair_index order.
  std::vector<double> contributions;
  int clamped = 0;
};

namespace detail {

struct PairObservation {
  int j = 0, k = 0;  // 1-based within-cluster indices, j < k
  Rect2 rect;
};

inline std::vector<PairObservation> collect_pairs(const OrdinalDataset& data, const UnivariateParams& params,
                                                  const Link& link) {
  std::vector<PairObservation> out;
  for (const auto& c : data.clusters) {
    std::vector<std::vector<double>> z(c.size());
    for (int t = 0; t < c.size(); ++t) z[t] = normal_bounds(link, shifted_cutpoints(params, c.x.row(t).transpose()));
    for (int t = 0; t < c.size(); ++t)
      for (int u = t + 1; u < c.size(); ++u)
        out.push_back({c.index[t], c.index[u], pair_rect(z[t], z[u], c.y[t], c.y[u], 0.0)});
  }
  return out;
}

inline double floored_log(double p, int* clamped) {
  if (p < kProbFloor) {
    if (clamped) ++*clamped;
    return std::log(kProbFloor);
  }
  return std::log(p);
}

}  // namespace detail

/// L2 = sum_i sum_{j<k} log f2(y_ij, y_ik).
inline PairwiseLik cl1_loglik(const OrdinalDataset& data, const UnivariateParams& params, const Link& link,
                              const CorrelationModel& corr) {
  const int d = data.dimension();
  if (corr.dimension() < d) throw DomainError("correlation model dimension is smaller than the cluster dimension");
  PairwiseLik out;
  out.contributions.assign(num_pairs(corr.dimension()), 0.0);
  for (auto& po : detail::collect_pairs(data, params, link)) {
    po.rect.rho = corr.rho(po.j, po.k);
    const double v = detail::floored_log(bvn_rect(po.rect), &out.clamped);
    out.contributions[pair_index(po.j, po.k, corr.dimension())] += v;
  }
  for (double v : out.contributions) out.value += v;
  return out;
}

struct CorrelationFit {
  CorrelationModel model;
  double loglik = 0.0;       ///< maximized L2
  Eigen::VectorXd gradient;  ///< dL2/dtheta at the estimate
  int clamped = 0;
  std::vector<std::string> warnings;
};

namespace detail {

struct Maximum1d {
  double arg = 0.0;
  double gradient = 0.0;
  bool boundary = false;
};

// Maximizes a smooth function of one correlation on [lo, hi]: Brent search in
// Fisher-z coordinates, then a bracketed root of the analytic derivative.
inline Maximum1d maximize_rho(const std::function<double(double)>& value, const std::function<double(double)>& slope,
                              double lo, double hi, double grad_tol) {
  const double zlo = std::atanh(lo), zhi = std::atanh(hi);
  auto negative = [&](double z) { return -value(std::tanh(z)); };
  std::uintmax_t iters = 200;
  const auto best = boost::math::tools::brent_find_minima(negative, zlo, zhi, 40, iters);
  double r = std::tanh(best.first);

  Maximum1d out;
  double g = slope(r);
  if (std::abs(g) <= grad_tol) return {r, g, false};
  // Expand a bracket around r in the direction of ascent.
  const double dir = g > 0.0 ? 1.0 : -1.0;
  double a = r, ga = g, step = 1e-6;
  double b = r, gb = g;
  for (int it = 0; it < 80; ++it) {
    b = std::clamp(r + dir * step, lo, hi);
    gb = slope(b);
    if ((gb > 0.0) != (ga > 0.0) || gb == 0.0) break;
    a = b;
    ga = gb;
    if (b == lo || b == hi) return {b, gb, true};
    step *= 2.0;
  }
  if (gb == 0.0) return {b, 0.0, false};
  if ((gb > 0.0) == (ga > 0.0)) return {b, gb, true};
  double left = std::min(a, b), right = std::max(a, b);
  double gl = a < b ? ga : gb, gr = a < b ? gb : ga;
  std::uintmax_t max_iter = 200;
  const auto root = boost::math::tools::toms748_solve(slope, left, right, gl, gr,
                                                      boost::math::tools::eps_tolerance<double>(52), max_iter);
  const double c1 = root.first, c2 = root.second;
  const double g1 = slope(c1), g2 = slope(c2);
  out = std::abs(g1) <= std::abs(g2) ? Maximum1d{c1, g1, false} : Maximum1d{c2, g2, false};
  return out;
}

}  // namespace detail

/// Lower admissible bound for an exchangeable correlation in dimension d.
inline double exchangeable_lower_bound(int d) {
  const double upper_tail = -1.0 + 1e-7;
  return d > 1 ? std::max(upper_tail, -1.0 / (d - 1) + 1e-6) : upper_tail;
}

/// Maximizes L2 over the free correlation parameters of `structure`.
inline CorrelationFit estimate_correlations(const OrdinalDataset& data, const UnivariateParams& params,
                                            const Link& link, Structure structure, const FitOptions& opt = {}) {
  const int d = std::max(1, data.dimension());
  CorrelationFit fit;
  auto pairs = detail::collect_pairs(data, params, link);
  const double hi = 1.0 - 1e-7;

  if (structure == Structure::independence) {
    fit.model = CorrelationModel::identity(d);
  } else if (pairs.empty()) {
    throw InputError("no cluster has two or more observations; correlations are not estimable");
  } else if (structure == Structure::exchangeable || structure == Structure::ar1) {
    const bool exch = structure == Structure::exchangeable;
    auto rho_of = [&](const detail::PairObservation& po, double t) {
      return exch ? t : std::pow(t, po.k - po.j);
    };
    auto drho_of = [&](const detail::PairObservation& po, double t) {
      const int lag = po.k - po.j;
      return exch ? 1.0 : lag * std::pow(t, lag - 1);
    };
    auto value = [&](double t) {
      double s = 0.0;
      for (auto po : pairs) {
        po.rect.rho = rho_of(po, t);
        s += detail::floored_log(bvn_rect(po.rect), nullptr);
      }
      return s;
    };
    auto slope = [&](double t) {
      double s = 0.0;
      for (auto po : pairs) {
        po.rect.rho = rho_of(po, t);
        const double p = bvn_rect(po.rect);
        if (p < kProbFloor) continue;
        s += bvn_rect_drho(po.rect) / p * drho_of(po, t);
      }
      return s;
    };
    const double lo = exch ? exchangeable_lower_bound(d) : -hi;
    const auto m = detail::maximize_rho(value, slope, lo, hi, opt.score_tol);
    if (m.boundary) fit.warnings.push_back(structure_name(structure) + " correlation estimate is on the boundary");
    fit.model = CorrelationModel(structure, d, Eigen::VectorXd::Constant(1, m.arg));
  } else {
    const int np = num_pairs(d);
    std::vector<std::vector<detail::PairObservation>> by_pair(np);
    for (const auto& po : pairs) by_pair[pair_index(po.j, po.k, d)].push_back(po);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d, d);
    for (int j = 1; j <= d; ++j)
      for (int k = j + 1; k <= d; ++k) {
        auto& obs = by_pair[pair_index(j, k, d)];
        if (obs.empty()) {
          fit.warnings.push_back("pair (" + std::to_string(j) + "," + std::to_string(k) +
                                 ") is never observed jointly; its correlation is set to 0");
          continue;
        }
        auto value = [&](double t) {
          double s = 0.0;
          for (auto po : obs) {
            po.rect.rho = t;
            s += detail::floored_log(bvn_rect(po.rect), nullptr);
          }
          return s;
        };
        auto slope = [&](double t) {
          double s = 0.0;
          for (auto po : obs) {
            po.rect.rho = t;
            const double p = bvn_rect(po.rect);
            if (p >= kProbFloor) s += bvn_rect_drho(po.rect) / p;
          }
          return s;
        };
        const auto m = detail::maximize_rho(value, slope, -hi, hi, opt.score_tol);
        if (m.boundary)
          fit.warnings.push_back("correlation of pair (" + std::to_string(j) + "," + std::to_string(k) +
                                 ") is on the boundary");
        r(j - 1, k - 1) = r(k - 1, j - 1) = m.arg;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
    if (eig.eigenvalues().minCoeff() < 1e-6) {
      r = nearest_correlation(r, 1e-6);
      fit.warnings.push_back(
          "WARNING: pairwise correlation estimates are not jointly positive definite; eigenvalues clipped at 1e-6 "
          "and the matrix rescaled to unit diagonal");
    }
    fit.model = CorrelationModel::unstructured(r);
  }

  // Final value and gradient in the free parameters.
  fit.gradient = Eigen::VectorXd::Zero(fit.model.num_free());
  fit.loglik = 0.0;
  for (auto po : pairs) {
    po.rect.rho = fit.model.rho(po.j, po.k);
    const double p = bvn_rect(po.rect);
    fit.loglik += detail::floored_log(p, &fit.clamped);
    if (p >= kProbFloor && fit.model.num_free() > 0)
      fit.gradient += bvn_rect_drho(po.rect) / p * fit.model.rho_gradient(po.j, po.k);
  }
  if (fit.clamped > 0)
    fit.warnings.push_back(std::to_string(fit.clamped) + " observed pair probabilities were below " +
                           std::to_string(kProbFloor) + " and were clamped");
  return fit;
}

}  // namespace wscore

#endif  // WSCORE_CL1_HPP
