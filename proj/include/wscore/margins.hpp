#ifndef WSCORE_MARGINS_HPP
#define WSCORE_MARGINS_HPP

// Univariate cumulative-link ordinal model: P(Y <= y | x) = F(alpha_y + x'beta)
// with common cutpoints alpha_1 < ... < alpha_{K-1}.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wscore/dataset.hpp"
#include "wscore/error.hpp"
#include "wscore/gauss.hpp"

namespace wscore {

/// a = (beta, gamma): p regression coefficients followed by q = K-1 cutpoints.
struct UnivariateParams {
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;

  int p() const noexcept { return static_cast<int>(beta.size()); }
  int q() const noexcept { return static_cast<int>(gamma.size()); }
  int r() const noexcept { return p() + q(); }
  int categories() const noexcept { return q() + 1; }

  bool cutpoints_ordered() const {
    for (Eigen::Index m = 1; m < gamma.size(); ++m)
      if (!(gamma[m] > gamma[m - 1])) return false;
    return gamma.allFinite() && beta.allFinite();
  }

  Eigen::VectorXd stacked() const {
    Eigen::VectorXd a(r());
    a << beta, gamma;
    return a;
  }

  static UnivariateParams unstack(const Eigen::VectorXd& a, int p) {
    return {a.head(p), a.tail(a.size() - p)};
  }
};

/// Coefficient names in stacked order: covariates, then alpha1..alpha{q}.
inline std::vector<std::string> parameter_names(const std::vector<std::string>& covariates, int q) {
  std::vector<std::string> names = covariates;
  for (int m = 1; m <= q; ++m) names.push_back("alpha" + std::to_string(m));
  return names;
}

/// gamma_ij = alpha + x'beta.
inline Eigen::VectorXd shifted_cutpoints(const UnivariateParams& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double nu = params.p() > 0 ? x.dot(params.beta) : 0.0;
  return params.gamma.array() + nu;
}

/// F1(y) = F(gamma_y) for y = 0..K with F1(0) = 0 and F1(K) = 1.
inline double category_cdf(const Link& link, const Eigen::VectorXd& g, int y) {
  const int k = static_cast<int>(g.size()) + 1;
  if (y <= 0) return 0.0;
  if (y >= k) return 1.0;
  return link.cdf(g[y - 1]);
}

namespace detail {
inline double cut_or(const Eigen::VectorXd& g, int m, double fallback) {
  return (m >= 1 && m <= g.size()) ? g[m - 1] : fallback;
}
}  // namespace detail

inline double ordinal_pmf(const Link& link, const Eigen::VectorXd& g, int y) {
  const int k = static_cast<int>(g.size()) + 1;
  if (y < 1 || y > k) throw DomainError("category " + std::to_string(y) + " outside 1.." + std::to_string(k));
  const double lo = detail::cut_or(g, y - 1, -kInf);
  const double hi = detail::cut_or(g, y, kInf);
  if (lo > 0.0) return std::max(0.0, link.ccdf(lo) - link.ccdf(hi));
  return std::max(0.0, link.cdf(hi) - link.cdf(lo));
}

inline double ordinal_pmf(const UnivariateParams& params, const Link& link, const Eigen::Ref<const Eigen::VectorXd>& x,
                          int y) {
  return ordinal_pmf(link, shifted_cutpoints(params, x), y);
}

/// Phi^{-1}(F(c)) for a cut value c: the latent normal bound of the discretized MVN.
inline double normal_bound(const Link& link, double c) {
  if (std::isinf(c)) return c;
  if (link.kind() == Link::Kind::normal) return c;
  // Symmetric links: use the tail that does not round to 1.
  if (c <= 0.0) {
    const double f = link.cdf(c);
    return f > 0.0 ? norm_quantile(f) : -kInf;
  }
  const double f = link.cdf(-c);
  return f > 0.0 ? -norm_quantile(f) : kInf;
}

/// d normal_bound / dc = f(c) / phi(Phi^{-1}(F(c))).
inline double normal_bound_derivative(const Link& link, double c) {
  if (std::isinf(c)) return 0.0;
  if (link.kind() == Link::Kind::normal) return 1.0;
  const double z = normal_bound(link, c);
  const double dens = norm_pdf(z);
  return dens > 0.0 ? link.pdf(c) / dens : 0.0;
}

/// Latent bounds Phi^{-1}(F1(y)) for y = 0..K (first -inf, last +inf).
inline std::vector<double> normal_bounds(const Link& link, const Eigen::VectorXd& g) {
  std::vector<double> z(g.size() + 2);
  z.front() = -kInf;
  z.back() = kInf;
  for (Eigen::Index m = 0; m < g.size(); ++m) z[m + 1] = normal_bound(link, g[m]);
  return z;
}

/// d log f1(y) / d gamma_ij. At most two nonzero entries.
inline Eigen::VectorXd score_gamma(const Link& link, const Eigen::VectorXd& g, int y) {
  const auto q = g.size();
  const double p = ordinal_pmf(link, g, y);
  if (!(p > 0.0))
    throw NumericalError("category " + std::to_string(y) + " has zero probability under the current parameters");
  Eigen::VectorXd s = Eigen::VectorXd::Zero(q);
  if (y <= q) s[y - 1] = link.pdf(g[y - 1]) / p;
  if (y >= 2) s[y - 2] = -link.pdf(g[y - 2]) / p;
  return s;
}

inline Eigen::VectorXd score_gamma(const UnivariateParams& params, const Link& link,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, int y) {
  return score_gamma(link, shifted_cutpoints(params, x), y);
}

/// d^2 log f1(y) / d gamma_ij d gamma_ij'.
inline Eigen::MatrixXd hessian_gamma(const Link& link, const Eigen::VectorXd& g, int y) {
  const auto q = g.size();
  const double p = ordinal_pmf(link, g, y);
  const Eigen::VectorXd s = score_gamma(link, g, y);
  Eigen::MatrixXd h = -s * s.transpose();
  if (y <= q) h(y - 1, y - 1) += link.pdf_derivative(g[y - 1]) / p;
  if (y >= 2) h(y - 2, y - 2) -= link.pdf_derivative(g[y - 2]) / p;
  return h;
}

/// Delta_ij = E[s s'] = -E[d^2 log f1]; tridiagonal.
inline Eigen::MatrixXd fisher_block(const Link& link, const Eigen::VectorXd& g) {
  const auto q = g.size();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q, q);
  std::vector<double> dens(q), pmf(q + 1);
  for (Eigen::Index m = 0; m < q; ++m) dens[m] = link.pdf(g[m]);
  for (Eigen::Index y = 1; y <= q + 1; ++y) pmf[y - 1] = ordinal_pmf(link, g, static_cast<int>(y));
  for (Eigen::Index m = 0; m < q; ++m) {
    // cut m+1 separates categories m+1 and m+2
    double v = 0.0;
    if (pmf[m] > 0.0) v += dens[m] * dens[m] / pmf[m];
    if (pmf[m + 1] > 0.0) v += dens[m] * dens[m] / pmf[m + 1];
    info(m, m) = v;
    if (m + 1 < q && pmf[m + 1] > 0.0) {
      info(m, m + 1) = -dens[m] * dens[m + 1] / pmf[m + 1];
      info(m + 1, m) = info(m, m + 1);
    }
  }
  return info;
}

inline Eigen::MatrixXd fisher_block(const UnivariateParams& params, const Link& link,
                                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  return fisher_block(link, shifted_cutpoints(params, x));
}

/// X_ij: q x r with row m = (x', e_m').
inline Eigen::MatrixXd design_block(const Eigen::Ref<const Eigen::VectorXd>& x, int q) {
  const auto p = x.size();
  Eigen::MatrixXd block(q, p + q);
  for (int m = 0; m < q; ++m) block.row(m).head(p) = x.transpose();
  block.rightCols(q).setIdentity();
  return block;
}

/// Cluster design X_i (d_i q x r), stacking design_block over the observed rows.
inline Eigen::MatrixXd cluster_design(const Cluster& c, int q) {
  const auto p = c.x.cols();
  Eigen::MatrixXd X(c.size() * q, p + q);
  for (int t = 0; t < c.size(); ++t) X.middleRows(t * q, q) = design_block(c.x.row(t).transpose(), q);
  return X;
}

/// Shared tolerances for the Newton-type solvers.
struct FitOptions {
  double score_tol = 1e-6;
  double step_tol = 1e-8;
  int max_iter = 100;
  int max_halvings = 30;
  MvnOptions mvn{};
};

struct ConvergenceInfo {
  int iterations = 0;
  double max_score = 0.0;
  double last_step = 0.0;
  std::vector<std::string> warnings;
};

struct IndependentFit {
  UnivariateParams params;
  double loglik = 0.0;
  ConvergenceInfo info;
};

/// Names the coefficients spanning the null space of a singular information matrix.
inline std::string collinear_columns(const Eigen::MatrixXd& info, const std::vector<std::string>& names) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  std::string out;
  if (kernel.cols() == 0 || (kernel.cols() == 1 && kernel.col(0).isZero())) return "(none detected)";
  for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
    if (kernel.row(i).cwiseAbs().maxCoeff() > 1e-8 && i < static_cast<Eigen::Index>(names.size())) {
      if (!out.empty()) out += ", ";
      out += names[i];
    }
  }
  return out.empty() ? "(none detected)" : out;
}

namespace detail {

struct IndependentTerms {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;  // observed
  Eigen::MatrixXd info;     // expected
};

inline IndependentTerms independent_terms(const OrdinalDataset& data, const Link& link, const UnivariateParams& a,
                                          bool second_order) {
  const int p = a.p(), q = a.q(), r = a.r();
  IndependentTerms t;
  t.score = Eigen::VectorXd::Zero(r);
  if (second_order) {
    t.hessian = Eigen::MatrixXd::Zero(r, r);
    t.info = Eigen::MatrixXd::Zero(r, r);
  }
  for (const auto& c : data.clusters) {
    for (int j = 0; j < c.size(); ++j) {
      const Eigen::VectorXd x = c.x.row(j).transpose();
      const Eigen::VectorXd g = shifted_cutpoints(a, x);
      const int y = c.y[j];
      const double pm = ordinal_pmf(link, g, y);
      if (!(pm > 0.0)) {
        t.loglik = -kInf;
        return t;
      }
      t.loglik += std::log(pm);
      const Eigen::VectorXd s = score_gamma(link, g, y);
      const double ssum = s.sum();
      t.score.head(p) += x * ssum;
      t.score.tail(q) += s;
      if (second_order) {
        auto add = [&](Eigen::MatrixXd& target, const Eigen::MatrixXd& blk) {
          const double total = blk.sum();
          const Eigen::VectorXd colsum = blk.colwise().sum().transpose();
          target.topLeftCorner(p, p) += total * x * x.transpose();
          target.topRightCorner(p, q) += x * colsum.transpose();
          target.bottomLeftCorner(q, p) += colsum * x.transpose();
          target.bottomRightCorner(q, q) += blk;
        };
        add(t.hessian, hessian_gamma(link, g, y));
        add(t.info, fisher_block(link, g));
      }
    }
  }
  return t;
}

// Cholesky succeeded and the factor is not numerically rank deficient.
inline bool well_conditioned(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = Eigen::MatrixXd(llt.matrixL()).diagonal();
  return d.allFinite() && d.minCoeff() > 1e-7 * d.maxCoeff();
}

inline void check_categories(const OrdinalDataset& data) {
  std::vector<int> count(data.categories + 1, 0);
  for (const auto& c : data.clusters)
    for (int y : c.y) ++count[y];
  for (int k = 1; k <= data.categories; ++k)
    if (count[k] == 0)
      throw IdentifiabilityError("category " + std::to_string(k) + " is never observed; cutpoints are not identified");
}

inline void check_covariates(const OrdinalDataset& data) {
  for (int col = 0; col < data.num_covariates(); ++col) {
    bool first = true, varies = false;
    double ref = 0.0;
    for (const auto& c : data.clusters)
      for (int j = 0; j < c.size(); ++j) {
        const double v = c.x(j, col);
        if (first) {
          ref = v;
          first = false;
        } else if (v != ref) {
          varies = true;
        }
      }
    if (!varies)
      throw IdentifiabilityError("covariate '" + data.covariate_names[col] +
                                 "' is constant; a constant column is absorbed by the cutpoints");
  }
}

}  // namespace detail

/// Log-likelihood L1 of the independence model.
inline double independent_loglik(const OrdinalDataset& data, const Link& link, const UnivariateParams& a) {
  return detail::independent_terms(data, link, a, false).loglik;
}

/// g1 = sum_i X_i' s_i(a).
inline Eigen::VectorXd independent_score(const OrdinalDataset& data, const Link& link, const UnivariateParams& a) {
  return detail::independent_terms(data, link, a, false).score;
}

/// Starting cutpoints: link quantiles of pooled cumulative category frequencies.
inline Eigen::VectorXd initial_cutpoints(const OrdinalDataset& data, const Link& link) {
  std::vector<double> count(data.categories + 1, 0.0);
  double total = 0.0;
  for (const auto& c : data.clusters)
    for (int y : c.y) {
      count[y] += 1.0;
      total += 1.0;
    }
  Eigen::VectorXd gamma(data.categories - 1);
  double cum = 0.0;
  for (int m = 1; m < data.categories; ++m) {
    cum += count[m];
    gamma[m - 1] = link.quantile(std::clamp(cum / total, 1e-10, 1.0 - 1e-10));
  }
  return gamma;
}

/// Maximum likelihood under independence (CL1 stage 1). Newton-Raphson on L1
/// with step halving that keeps the cutpoints ordered and L1 nondecreasing.
inline IndependentFit fit_independent(const OrdinalDataset& data, const Link& link, const FitOptions& opt = {}) {
  data.validate();
  if (data.clusters.empty()) throw InputError("no clusters");
  detail::check_categories(data);
  detail::check_covariates(data);
  const int p = data.num_covariates(), q = data.num_cutpoints();
  const auto names = parameter_names(data.covariate_names, q);

  UnivariateParams a{Eigen::VectorXd::Zero(p), initial_cutpoints(data, link)};
  IndependentFit fit;
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    const auto t = detail::independent_terms(data, link, a, true);
    if (!std::isfinite(t.loglik)) throw NumericalError("independence log-likelihood is not finite at the start value");
    Eigen::LLT<Eigen::MatrixXd> llt(-t.hessian);
    if (!detail::well_conditioned(llt)) {
      llt.compute(t.info);
      if (!detail::well_conditioned(llt))
        throw NumericalError("singular information matrix; collinear coefficients: " + collinear_columns(t.info, names));
    }
    const Eigen::VectorXd step = llt.solve(t.score);
    fit.info.iterations = iter;
    fit.info.max_score = t.score.cwiseAbs().maxCoeff();
    fit.info.last_step = step.cwiseAbs().maxCoeff();
    if (fit.info.max_score <= opt.score_tol && fit.info.last_step <= opt.step_tol) {
      fit.params = a;
      fit.loglik = t.loglik;
      return fit;
    }
    const Eigen::VectorXd a0 = a.stacked();
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, scale *= 0.5) {
      UnivariateParams trial = UnivariateParams::unstack(a0 + scale * step, p);
      if (!trial.cutpoints_ordered()) continue;
      const double ll = independent_loglik(data, link, trial);
      if (std::isfinite(ll) && ll >= t.loglik - 1e-10 * (1.0 + std::abs(t.loglik))) {
        a = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      const Eigen::VectorXd last = a.stacked();
      throw ConvergenceError("independence fit: step halving failed at iteration " + std::to_string(iter),
                             std::vector<double>(last.data(), last.data() + last.size()));
    }
  }
  const Eigen::VectorXd last = a.stacked();
  throw ConvergenceError("independence fit did not converge in " + std::to_string(opt.max_iter) + " iterations",
                         std::vector<double>(last.data(), last.data() + last.size()));
}

inline IndependentFit fit_independent(const OrdinalDataset& data, const Link& link,
                                      const std::vector<std::string>& covariates, const FitOptions& opt = {}) {
  return fit_independent(select_covariates(data, covariates), link, opt);
}

}  // namespace wscore

#endif  // WSCORE_MARGINS_HPP
