#ifndef WSCORE_SELECTION_HPP
#define WSCORE_SELECTION_HPP

// CL1 information criteria. The joint CL1 estimating function stacks the
// univariate scores g1 = sum_i X_i' s_i and the pairwise correlation scores
// g2 = sum_i sum_{j<k} dlog f2 / dtheta. With sensitivity H and variability J,
//   CL1AIC = -2 L2 + 2 tr(J H^{-1}),  CL1BIC = -2 L2 + log(n) tr(J H^{-1}).

#include <algorithm>
#include <cmath>
#include <map>
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
#include "wscore/parallel.hpp"
#include "wscore/weighted_scores.hpp"

namespace wscore {

enum class JMode { empirical, model };

inline JMode parse_jmode(const std::string& s) {
  if (s == "empirical") return JMode::empirical;
  if (s == "model") return JMode::model;
  throw InputError("unknown J matrix mode '" + s + "' (expected empirical or model)");
}

namespace detail {

// Per-observation quantities of one cluster at the stage-one fit.
struct MarginTerms {
  Eigen::VectorXd g;       // shifted cutpoints
  std::vector<double> z;   // latent bounds, K+1 entries
  Eigen::VectorXd dz;      // d z_m / d gamma_m, m = 1..q
  Eigen::MatrixXd scores;  // q x K
  Eigen::MatrixXd X;       // q x r
};

inline std::vector<MarginTerms> margin_terms(const Cluster& c, const UnivariateParams& a, const Link& link) {
  std::vector<MarginTerms> out(c.size());
  for (int t = 0; t < c.size(); ++t) {
    auto& m = out[t];
    m.g = shifted_cutpoints(a, c.x.row(t).transpose());
    m.z = normal_bounds(link, m.g);
    m.dz.resize(a.q());
    for (int k = 0; k < a.q(); ++k) m.dz[k] = normal_bound_derivative(link, m.g[k]);
    m.scores = score_table(link, m.g);
    m.X = design_block(c.x.row(t).transpose(), a.q());
  }
  return out;
}

// Cell tables of one pair: probabilities, d/drho, and d/dgamma of each margin.
struct PairTerms {
  int t = 0, u = 0;            // observation positions
  Eigen::VectorXd drho_dtheta;
  Eigen::MatrixXd prob;        // K x K
  Eigen::MatrixXd dprob;       // d f2 / d rho
  Eigen::MatrixXd psi;         // d log f2 / d rho (0 on null cells)
  Eigen::MatrixXd dgamma_t;    // q x K^2 (column a*K+b), d f2 / d gamma_t
  Eigen::MatrixXd dgamma_u;
};

inline PairTerms pair_terms(const std::vector<MarginTerms>& mt, int t, int u, double rho, Eigen::VectorXd drho) {
  const auto K = static_cast<Eigen::Index>(mt[t].z.size()) - 1;
  const auto q = K - 1;
  PairTerms p;
  p.t = t;
  p.u = u;
  p.drho_dtheta = std::move(drho);
  p.prob.resize(K, K);
  p.dprob.resize(K, K);
  p.psi.resize(K, K);
  p.dgamma_t = Eigen::MatrixXd::Zero(q, K * K);
  p.dgamma_u = Eigen::MatrixXd::Zero(q, K * K);
  for (Eigen::Index a = 1; a <= K; ++a)
    for (Eigen::Index b = 1; b <= K; ++b) {
      const Rect2 rect = pair_rect(mt[t].z, mt[u].z, int(a), int(b), rho);
      const double f = bvn_rect(rect);
      const double df = bvn_rect_drho(rect);
      p.prob(a - 1, b - 1) = f;
      p.dprob(a - 1, b - 1) = df;
      p.psi(a - 1, b - 1) = f > 0.0 ? df / f : 0.0;
      const auto col = (a - 1) * K + (b - 1);
      if (a <= q) p.dgamma_t(a - 1, col) += bvn_rect_dbound(rect, RectBound::upper_a) * mt[t].dz[a - 1];
      if (a >= 2) p.dgamma_t(a - 2, col) += bvn_rect_dbound(rect, RectBound::lower_a) * mt[t].dz[a - 2];
      if (b <= q) p.dgamma_u(b - 1, col) += bvn_rect_dbound(rect, RectBound::upper_b) * mt[u].dz[b - 1];
      if (b >= 2) p.dgamma_u(b - 2, col) += bvn_rect_dbound(rect, RectBound::lower_b) * mt[u].dz[b - 2];
    }
  return p;
}

inline std::vector<PairTerms> cluster_pairs(const Cluster& c, const std::vector<MarginTerms>& mt,
                                            const CorrelationModel& corr) {
  std::vector<PairTerms> out;
  for (int t = 0; t < c.size(); ++t)
    for (int u = t + 1; u < c.size(); ++u)
      out.push_back(pair_terms(mt, t, u, corr.rho(c.index[t], c.index[u]), corr.rho_gradient(c.index[t], c.index[u])));
  return out;
}

// Joint cell probabilities of the discretized normal over selected observations.
class JointCells {
 public:
  JointCells(const std::vector<int>& obs, const std::vector<MarginTerms>& mt, const Cluster& c,
             const CorrelationModel& corr, const MvnOptions& opt)
      : obs_(obs) {
    std::vector<std::vector<double>> cuts;
    std::vector<int> index;
    for (int t : obs) {
      cuts.push_back(mt[t].z);
      index.push_back(c.index[t]);
    }
    K_ = static_cast<int>(mt[obs[0]].z.size()) - 1;
    cells_ = mvn_lattice_cells(cuts, corr.submatrix(index), opt);
  }

  /// Probability of categories y (1-based) for the observations in construction order.
  double at(const std::vector<int>& y) const {
    std::size_t flat = 0;
    for (int v : y) flat = flat * K_ + (v - 1);
    return cells_[flat];
  }

  int categories() const noexcept { return K_; }
  const std::vector<int>& observations() const noexcept { return obs_; }

 private:
  std::vector<int> obs_;
  int K_ = 0;
  std::vector<double> cells_;
};

// Visits every category vector of length `dims` in row-major order.
template <class F>
void for_each_cell(int dims, int K, F&& f) {
  std::vector<int> y(dims, 1);
  while (true) {
    f(y);
    int k = dims - 1;
    while (k >= 0 && y[k] == K) y[k--] = 1;
    if (k < 0) return;
    ++y[k];
  }
}

}  // namespace detail

/// Sensitivity matrix H (information form, zero upper-right block), averaged over clusters.
inline Eigen::MatrixXd assemble_H(const OrdinalDataset& data, const UnivariateParams& a, const CorrelationModel& corr,
                                  const Link& link) {
  const int r = a.r(), nt = corr.num_free(), t = r + nt;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(t, t);
  for (const auto& c : data.clusters) {
    const auto mt = detail::margin_terms(c, a, link);
    const Eigen::MatrixXd X = cluster_design(c, a.q());
    H.topLeftCorner(r, r) += X.transpose() * cluster_fisher(c, a, link) * X;
    if (nt == 0) continue;
    for (const auto& p : detail::cluster_pairs(c, mt, corr)) {
      // E[psi * dlog f2/dgamma] = sum_cells dprob * dgamma / prob.
      Eigen::RowVectorXd w(p.psi.size());
      const Eigen::Index K = p.prob.rows();
      for (Eigen::Index aa = 0; aa < K; ++aa)
        for (Eigen::Index bb = 0; bb < K; ++bb) w[aa * K + bb] = p.psi(aa, bb);
      const Eigen::VectorXd et = p.dgamma_t * w.transpose();
      const Eigen::VectorXd eu = p.dgamma_u * w.transpose();
      const Eigen::RowVectorXd cross = et.transpose() * mt[p.t].X + eu.transpose() * mt[p.u].X;
      H.bottomLeftCorner(nt, r) += p.drho_dtheta * cross;
      const double info = (p.dprob.array() * p.psi.array()).sum();
      H.bottomRightCorner(nt, nt) += info * p.drho_dtheta * p.drho_dtheta.transpose();
    }
  }
  return H / static_cast<double>(data.num_clusters());
}

/// Per-cluster joint CL1 score g_i = (X_i' s_i, sum_pairs dlog f2/dtheta).
inline Eigen::VectorXd cluster_cl1_score(const Cluster& c, const UnivariateParams& a, const CorrelationModel& corr,
                                         const Link& link) {
  const int r = a.r(), nt = corr.num_free();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(r + nt);
  g.head(r) = cluster_design(c, a.q()).transpose() * cluster_score(c, a, link);
  if (nt == 0) return g;
  std::vector<std::vector<double>> z(c.size());
  for (int t = 0; t < c.size(); ++t) z[t] = normal_bounds(link, shifted_cutpoints(a, c.x.row(t).transpose()));
  for (int t = 0; t < c.size(); ++t)
    for (int u = t + 1; u < c.size(); ++u) {
      const Rect2 rect = pair_rect(z[t], z[u], c.y[t], c.y[u], corr.rho(c.index[t], c.index[u]));
      const double f = bvn_rect(rect);
      if (f < kProbFloor) continue;
      g.tail(nt) += bvn_rect_drho(rect) / f * corr.rho_gradient(c.index[t], c.index[u]);
    }
  return g;
}

/// Variability matrix J. Empirical: (1/n) sum_i g_i g_i'. Model: expectations
/// under the discretized normal using bivariate, trivariate and four-variate cells.
inline Eigen::MatrixXd assemble_J(const OrdinalDataset& data, const UnivariateParams& a, const CorrelationModel& corr,
                                  const Link& link, JMode mode = JMode::empirical, const MvnOptions& mvn = {}) {
  const int r = a.r(), nt = corr.num_free(), t = r + nt;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(t, t);
  if (mode == JMode::empirical) {
    for (const auto& c : data.clusters) {
      const Eigen::VectorXd g = cluster_cl1_score(c, a, corr, link);
      J += g * g.transpose();
    }
    return J / static_cast<double>(data.num_clusters());
  }

  for (const auto& c : data.clusters) {
    const auto mt = detail::margin_terms(c, a, link);
    const Eigen::MatrixXd X = cluster_design(c, a.q());
    J.topLeftCorner(r, r) += X.transpose() * score_covariance(c, a, link, corr) * X;
    if (nt == 0) continue;
    const auto pairs = detail::cluster_pairs(c, mt, corr);
    std::map<std::vector<int>, detail::JointCells> joint;
    auto cells = [&](std::vector<int> obs) -> const detail::JointCells& {
      std::sort(obs.begin(), obs.end());
      auto it = joint.find(obs);
      if (it == joint.end()) it = joint.emplace(obs, detail::JointCells(obs, mt, c, corr, mvn)).first;
      return it->second;
    };
    const int K = a.categories();

    // Univariate-by-pair block.
    Eigen::MatrixXd J12 = Eigen::MatrixXd::Zero(r, nt);
    for (const auto& p : pairs)
      for (int v = 0; v < c.size(); ++v) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(a.q());
        if (v == p.t) {
          e = mt[v].scores * p.dprob.rowwise().sum();
        } else if (v == p.u) {
          e = mt[v].scores * p.dprob.colwise().sum().transpose();
        } else {
          const auto& jc = cells({v, p.t, p.u});
          const auto& order = jc.observations();
          detail::for_each_cell(3, K, [&](const std::vector<int>& y) {
            int yv = 0, yt = 0, yu = 0;
            for (int s = 0; s < 3; ++s) {
              if (order[s] == v) yv = y[s];
              if (order[s] == p.t) yt = y[s];
              if (order[s] == p.u) yu = y[s];
            }
            const double prob = jc.at(y);
            if (prob > 0.0) e += prob * p.psi(yt - 1, yu - 1) * mt[v].scores.col(yv - 1);
          });
        }
        J12 += mt[v].X.transpose() * e * p.drho_dtheta.transpose();
      }
    J.topRightCorner(r, nt) += J12;
    J.bottomLeftCorner(nt, r) += J12.transpose();

    // Pair-by-pair block.
    for (std::size_t P = 0; P < pairs.size(); ++P)
      for (std::size_t Q = P; Q < pairs.size(); ++Q) {
        const auto& p1 = pairs[P];
        const auto& p2 = pairs[Q];
        double e = 0.0;
        if (P == Q) {
          e = (p1.dprob.array() * p1.psi.array()).sum();
        } else {
          std::vector<int> obs{p1.t, p1.u};
          for (int v : {p2.t, p2.u})
            if (std::find(obs.begin(), obs.end(), v) == obs.end()) obs.push_back(v);
          const auto& jc = cells(obs);
          const auto& order = jc.observations();
          const int dims = static_cast<int>(order.size());
          auto pos = [&](int v) { return int(std::find(order.begin(), order.end(), v) - order.begin()); };
          const int a1 = pos(p1.t), b1 = pos(p1.u), a2 = pos(p2.t), b2 = pos(p2.u);
          detail::for_each_cell(dims, K, [&](const std::vector<int>& y) {
            const double prob = jc.at(y);
            if (prob > 0.0) e += prob * p1.psi(y[a1] - 1, y[b1] - 1) * p2.psi(y[a2] - 1, y[b2] - 1);
          });
        }
        const Eigen::MatrixXd blk = e * p1.drho_dtheta * p2.drho_dtheta.transpose();
        J.bottomRightCorner(nt, nt) += blk;
        if (P != Q) J.bottomRightCorner(nt, nt) += blk.transpose();
      }
  }
  J /= static_cast<double>(data.num_clusters());
  return 0.5 * (J + J.transpose());
}

/// Identifies one candidate model.
struct ModelDescriptor {
  Link link = Link::probit();
  Structure structure = Structure::exchangeable;
  std::vector<std::string> covariates;

  std::string label() const {
    std::string cov;
    for (const auto& v : covariates) cov += (cov.empty() ? "" : "+") + v;
    return link.name() + "/" + structure_name(structure) + "/" + (cov.empty() ? "(none)" : cov);
  }
};

struct CriteriaReport {
  ModelDescriptor model;
  double cl1aic = 0.0;
  double cl1bic = 0.0;
  double L2 = 0.0;
  double penalty_trace = 0.0;
  int parameters = 0;
  CorrelationModel correlation;
  std::vector<std::string> warnings;
};

/// penalty = tr(J H^{-1}).
inline double penalty_trace(const Eigen::MatrixXd& J, const Eigen::MatrixXd& H) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
  if (!lu.isInvertible()) throw MatrixError("CL1 sensitivity matrix is singular; the model is not identified at this fit");
  // tr(J H^{-1}) = tr(H^{-1} J)
  return lu.solve(J).trace();
}

inline CriteriaReport criteria_from_fits(const OrdinalDataset& data, const Link& link, const IndependentFit& stage1,
                                         const CorrelationFit& corr, JMode mode = JMode::empirical,
                                         const MvnOptions& mvn = {}) {
  CriteriaReport rep;
  rep.model = {link, corr.model.structure(), data.covariate_names};
  rep.correlation = corr.model;
  rep.warnings = corr.warnings;
  const Eigen::MatrixXd H = assemble_H(data, stage1.params, corr.model, link);
  const Eigen::MatrixXd J = assemble_J(data, stage1.params, corr.model, link, mode, mvn);
  rep.L2 = cl1_loglik(data, stage1.params, link, corr.model).value;
  rep.penalty_trace = penalty_trace(J, H);
  rep.parameters = static_cast<int>(H.rows());
  rep.cl1aic = -2.0 * rep.L2 + 2.0 * rep.penalty_trace;
  rep.cl1bic = -2.0 * rep.L2 + std::log(static_cast<double>(data.num_clusters())) * rep.penalty_trace;
  return rep;
}

/// Fits the CL1 model (both stages) and evaluates CL1AIC / CL1BIC.
inline CriteriaReport cl1_criteria(const OrdinalDataset& data, const ModelDescriptor& model,
                                   JMode mode = JMode::empirical, const FitOptions& opt = {}) {
  const auto sub = select_covariates(data, model.covariates);
  const auto stage1 = fit_independent(sub, model.link, opt);
  const auto corr = estimate_correlations(sub, stage1.params, model.link, model.structure, opt);
  auto rep = criteria_from_fits(sub, model.link, stage1, corr, mode, opt.mvn);
  rep.model = model;
  return rep;
}

enum class Criterion { cl1aic, cl1bic };

inline Criterion parse_criterion(const std::string& s) {
  if (s == "cl1aic" || s == "CL1AIC" || s == "aic") return Criterion::cl1aic;
  if (s == "cl1bic" || s == "CL1BIC" || s == "bic") return Criterion::cl1bic;
  throw InputError("unknown criterion '" + s + "'");
}

inline double criterion_value(const CriteriaReport& r, Criterion c) {
  return c == Criterion::cl1aic ? r.cl1aic : r.cl1bic;
}

struct FailedCandidate {
  ModelDescriptor model;
  std::string message;
};

struct SearchResult {
  std::vector<CriteriaReport> ranked;
  std::vector<FailedCandidate> failed;
};

/// Orders reports by criterion, then fewer parameters, then descriptor label.
inline void rank_reports(std::vector<CriteriaReport>& reports, Criterion by) {
  std::sort(reports.begin(), reports.end(), [by](const CriteriaReport& x, const CriteriaReport& y) {
    return std::make_tuple(criterion_value(x, by), x.parameters, x.model.label()) <
           std::make_tuple(criterion_value(y, by), y.parameters, y.model.label());
  });
}

/// One CL1 fit per candidate, run in parallel; failures are reported, not ranked.
inline SearchResult model_search(const OrdinalDataset& data, const std::vector<ModelDescriptor>& candidates,
                                 Criterion by = Criterion::cl1bic, JMode mode = JMode::empirical,
                                 const FitOptions& opt = {}, int threads = 1) {
  if (candidates.empty()) throw InputError("model search needs at least one candidate");
  std::vector<CriteriaReport> reports(candidates.size());
  std::vector<std::string> errors(candidates.size());
  std::vector<char> ok(candidates.size(), 0);
  parallel_for(candidates.size(), threads, [&](std::size_t k) {
    try {
      reports[k] = cl1_criteria(data, candidates[k], mode, opt);
      ok[k] = 1;
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });
  SearchResult out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (ok[k]) out.ranked.push_back(std::move(reports[k]));
    else out.failed.push_back({candidates[k], errors[k]});
  }
  rank_reports(out.ranked, by);
  return out;
}

}  // namespace wscore

#endif  // WSCORE_SELECTION_HPP
