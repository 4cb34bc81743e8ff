#ifndef WSCORE_WEIGHTED_SCORES_HPP
#define WSCORE_WEIGHTED_SCORES_HPP

// Weighted scores estimating equations
//   g1* = sum_i X_i' W_i^{-1} s_i(a) = 0,   W_i^{-1} = Delta_i Omega_i^{-1},
// with Omega_i the covariance of the univariate scores under a discretized
// normal working model fitted by CL1, and the sandwich covariance of the root.

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wscore/cl1.hpp"
#include "wscore/correlation.hpp"
#include "wscore/dataset.hpp"
#include "wscore/error.hpp"
#include "wscore/gauss.hpp"
#include "wscore/margins.hpp"

namespace wscore {

struct ClusterWeights {
  Eigen::MatrixXd delta;  ///< block diagonal Delta_i
  Eigen::MatrixXd omega;  ///< Cov(s_i) under the working model
  Eigen::MatrixXd winv;   ///< Delta_i Omega_i^{-1}
  bool ridged = false;
};

struct WorkingWeights {
  std::vector<ClusterWeights> clusters;
  int ridged = 0;
};

/// Score matrix S (q x K): column y-1 holds score_gamma(y).
inline Eigen::MatrixXd score_table(const Link& link, const Eigen::VectorXd& g) {
  const auto q = g.size();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(q, q + 1);
  for (int y = 1; y <= q + 1; ++y)
    if (ordinal_pmf(link, g, y) > 0.0) s.col(y - 1) = score_gamma(link, g, y);
  return s;
}

/// K x K table of pair probabilities f2(y, y') for latent bounds zj, zk.
inline Eigen::MatrixXd pair_table(const std::vector<double>& zj, const std::vector<double>& zk, double rho) {
  const auto k = static_cast<Eigen::Index>(zj.size()) - 1;
  Eigen::MatrixXd p(k, k);
  for (Eigen::Index a = 1; a <= k; ++a)
    for (Eigen::Index b = 1; b <= k; ++b) p(a - 1, b - 1) = bvn_rect(pair_rect(zj, zk, int(a), int(b), rho));
  return p;
}

/// Omega_i: diagonal blocks Delta_ij, off-diagonal blocks E[s_ij s_ik'] = S_j P_jk S_k'.
inline Eigen::MatrixXd score_covariance(const Cluster& c, const UnivariateParams& params, const Link& link,
                                        const CorrelationModel& corr) {
  const int q = params.q(), m = c.size();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(m * q, m * q);
  std::vector<Eigen::MatrixXd> tables(m);
  std::vector<std::vector<double>> z(m);
  for (int t = 0; t < m; ++t) {
    const Eigen::VectorXd g = shifted_cutpoints(params, c.x.row(t).transpose());
    omega.block(t * q, t * q, q, q) = fisher_block(link, g);
    tables[t] = score_table(link, g);
    z[t] = normal_bounds(link, g);
  }
  for (int t = 0; t < m; ++t)
    for (int u = t + 1; u < m; ++u) {
      const double rho = corr.rho(c.index[t], c.index[u]);
      if (rho == 0.0) continue;
      const Eigen::MatrixXd blk = tables[t] * pair_table(z[t], z[u], rho) * tables[u].transpose();
      omega.block(t * q, u * q, q, q) = blk;
      omega.block(u * q, t * q, q, q) = blk.transpose();
    }
  return omega;
}

inline Eigen::MatrixXd cluster_fisher(const Cluster& c, const UnivariateParams& params, const Link& link) {
  const int q = params.q(), m = c.size();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(m * q, m * q);
  for (int t = 0; t < m; ++t) delta.block(t * q, t * q, q, q) = fisher_block(params, link, c.x.row(t).transpose());
  return delta;
}

/// s_i(a): stacked univariate scores of one cluster.
inline Eigen::VectorXd cluster_score(const Cluster& c, const UnivariateParams& params, const Link& link) {
  const int q = params.q(), m = c.size();
  Eigen::VectorXd s(m * q);
  for (int t = 0; t < m; ++t) s.segment(t * q, q) = score_gamma(params, link, c.x.row(t).transpose(), c.y[t]);
  return s;
}

inline ClusterWeights cluster_weights(const Cluster& c, const UnivariateParams& params, const Link& link,
                                      const CorrelationModel& corr) {
  ClusterWeights w;
  w.delta = cluster_fisher(c, params, link);
  w.omega = score_covariance(c, params, link, corr);
  Eigen::LLT<Eigen::MatrixXd> llt(w.omega);
  const auto dim = w.omega.rows();
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Eigen::VectorXd diag = Eigen::MatrixXd(llt.matrixL()).diagonal();
    ok = diag.minCoeff() > 1e-7 * diag.maxCoeff();
  }
  if (!ok) {
    w.omega.diagonal().array() += 1e-10 * w.omega.trace() / static_cast<double>(dim);
    llt.compute(w.omega);
    if (llt.info() != Eigen::Success)
      throw MatrixError("working score covariance of cluster '" + c.id + "' is not positive definite");
    w.ridged = true;
  }
  w.winv = llt.solve(w.delta).transpose();
  return w;
}

inline WorkingWeights build_weights(const OrdinalDataset& data, const UnivariateParams& params,
                                    const CorrelationModel& corr, const Link& link) {
  WorkingWeights out;
  out.clusters.reserve(data.clusters.size());
  for (const auto& c : data.clusters) {
    out.clusters.push_back(cluster_weights(c, params, link, corr));
    out.ridged += out.clusters.back().ridged ? 1 : 0;
  }
  return out;
}

struct SandwichCovariance {
  Eigen::MatrixXd H;  ///< -dg1*/da
  Eigen::MatrixXd J;
  Eigen::MatrixXd V;
};

struct Estimate {
  std::string name;
  double est = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 0.0;
};

struct FitReport {
  Link link = Link::probit();
  std::vector<std::string> covariates;
  UnivariateParams params;        ///< weighted scores solution
  UnivariateParams stage1;        ///< independence MLE
  CorrelationFit correlation;     ///< stage 2
  SandwichCovariance covariance;  ///< in stacked (beta, gamma) order
  std::vector<Estimate> estimates;  ///< cutpoints first, then covariates
  ConvergenceInfo info;
  std::vector<Eigen::VectorXd> history;
};

namespace detail {

struct WeightedTerms {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  Eigen::MatrixXd J;
  bool finite = true;
};

inline WeightedTerms weighted_terms(const OrdinalDataset& data, const UnivariateParams& a, const Link& link,
                                    const WorkingWeights& w, bool with_j) {
  const int r = a.r(), q = a.q();
  WeightedTerms t{Eigen::VectorXd::Zero(r), Eigen::MatrixXd::Zero(r, r), Eigen::MatrixXd(), true};
  if (with_j) t.J = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t i = 0; i < data.clusters.size(); ++i) {
    const auto& c = data.clusters[i];
    Eigen::VectorXd s;
    try {
      s = cluster_score(c, a, link);
    } catch (const NumericalError&) {
      t.finite = false;
      return t;
    }
    const Eigen::MatrixXd X = cluster_design(c, q);
    const Eigen::MatrixXd XtW = X.transpose() * w.clusters[i].winv;
    const Eigen::VectorXd gi = XtW * s;
    t.g += gi;
    t.H += XtW * cluster_fisher(c, a, link) * X;
    if (with_j) t.J += gi * gi.transpose();
  }
  t.finite = t.g.allFinite() && t.H.allFinite();
  return t;
}

}  // namespace detail

/// Robust covariance V = H^{-1} J H^{-T} at a solution.
inline SandwichCovariance sandwich_covariance(const OrdinalDataset& data, const UnivariateParams& a_hat,
                                              const WorkingWeights& weights, const Link& link) {
  auto t = detail::weighted_terms(data, a_hat, link, weights, true);
  if (!t.finite) throw NumericalError("scores are not finite at the solution");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(t.H);
  if (!lu.isInvertible()) {
    const auto names = parameter_names(data.covariate_names, a_hat.q());
    throw MatrixError("sensitivity matrix is singular; collinear coefficients: " + collinear_columns(t.H, names));
  }
  const Eigen::MatrixXd Hinv = lu.inverse();
  Eigen::MatrixXd V = Hinv * t.J * Hinv.transpose();
  V = 0.5 * (V + V.transpose());
  return {t.H, t.J, V};
}

/// Z = est / SE and two-sided normal p-value.
inline std::pair<double, double> wald_test(double est, double se) {
  if (!(se > 0.0)) throw NumericalError("standard error is zero; Wald test undefined");
  const double z = est / se;
  return {z, 2.0 * norm_ccdf(std::abs(z))};
}

inline std::pair<double, double> wald_test(const FitReport& fit, const std::string& coefficient) {
  for (const auto& e : fit.estimates)
    if (e.name == coefficient) return wald_test(e.est, e.se);
  throw InputError("no coefficient named '" + coefficient + "'");
}

/// Newton iterations on g1* with the weights frozen at the working fit and
/// Delta_i(a) refreshed inside -H; starts from `start`.
inline UnivariateParams solve_weighted_equations(const OrdinalDataset& data, const Link& link,
                                                 const WorkingWeights& weights, const UnivariateParams& start,
                                                 const FitOptions& opt, ConvergenceInfo& info,
                                                 std::vector<Eigen::VectorXd>* history = nullptr) {
  const int p = start.p();
  UnivariateParams a = start;
  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    const auto t = detail::weighted_terms(data, a, link, weights, false);
    if (!t.finite) throw NumericalError("weighted scores are not finite");
    info.iterations = iter;
    info.max_score = t.g.cwiseAbs().maxCoeff();
    if (history) history->push_back(a.stacked());
    if (info.max_score <= opt.score_tol) return a;
    if (iter == opt.max_iter) break;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(t.H);
    if (!lu.isInvertible()) {
      const auto names = parameter_names(data.covariate_names, a.q());
      throw MatrixError("weighted sensitivity matrix is singular; collinear coefficients: " +
                        collinear_columns(t.H, names));
    }
    const Eigen::VectorXd step = lu.solve(t.g);
    info.last_step = step.cwiseAbs().maxCoeff();
    const Eigen::VectorXd a0 = a.stacked();
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, scale *= 0.5) {
      UnivariateParams trial = UnivariateParams::unstack(a0 + scale * step, p);
      if (!trial.cutpoints_ordered()) continue;
      if (!detail::weighted_terms(data, trial, link, weights, false).finite) continue;
      a = std::move(trial);
      accepted = true;
      break;
    }
    if (!accepted) {
      const Eigen::VectorXd last = a.stacked();
      throw ConvergenceError("weighted scores: step halving failed at iteration " + std::to_string(iter),
                             std::vector<double>(last.data(), last.data() + last.size()));
    }
  }
  const Eigen::VectorXd last = a.stacked();
  throw ConvergenceError("weighted scores did not converge in " + std::to_string(opt.max_iter) + " iterations",
                         std::vector<double>(last.data(), last.data() + last.size()));
}

/// Table rows: cutpoints alpha1.. first, then covariates.
inline std::vector<Estimate> estimate_table(const UnivariateParams& a, const Eigen::MatrixXd& V,
                                            const std::vector<std::string>& covariates) {
  std::vector<Estimate> rows;
  auto add = [&](const std::string& name, int pos) {
    Estimate e{name, a.stacked()[pos], std::sqrt(std::max(0.0, V(pos, pos)))};
    if (e.se > 0.0) std::tie(e.z, e.p) = wald_test(e.est, e.se);
    rows.push_back(e);
  };
  for (int m = 0; m < a.q(); ++m) add("alpha" + std::to_string(m + 1), a.p() + m);
  for (int k = 0; k < a.p(); ++k) add(covariates[k], k);
  return rows;
}

/// Full pipeline on a dataset already restricted to the model covariates.
inline FitReport solve_weighted_scores(const OrdinalDataset& data, const Link& link, Structure structure,
                                       const FitOptions& opt = {}) {
  FitReport rep;
  rep.link = link;
  rep.covariates = data.covariate_names;
  const auto stage1 = fit_independent(data, link, opt);
  rep.stage1 = stage1.params;
  rep.correlation = estimate_correlations(data, stage1.params, link, structure, opt);
  const auto weights = build_weights(data, stage1.params, rep.correlation.model, link);
  rep.info.warnings = rep.correlation.warnings;
  if (weights.ridged > 0)
    rep.info.warnings.push_back(std::to_string(weights.ridged) +
                                " cluster score covariances were nearly singular and received a ridge");
  rep.params = solve_weighted_equations(data, link, weights, stage1.params, opt, rep.info, &rep.history);
  rep.covariance = sandwich_covariance(data, rep.params, weights, link);
  rep.estimates = estimate_table(rep.params, rep.covariance.V, rep.covariates);
  return rep;
}

inline FitReport solve_weighted_scores(const OrdinalDataset& data, const Link& link,
                                       const std::vector<std::string>& covariates, Structure structure,
                                       const FitOptions& opt = {}) {
  return solve_weighted_scores(select_covariates(data, covariates), link, structure, opt);
}

}  // namespace wscore

#endif  // WSCORE_WEIGHTED_SCORES_HPP
