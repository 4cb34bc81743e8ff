#ifndef WSCORE_SIMULATE_HPP
#define WSCORE_SIMULATE_HPP

// Data generators for clustered ordinal responses with copula dependence and
// a replication harness summarizing estimator accuracy, Wald test size and
// model selection frequencies.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <Eigen/Dense>

#include "wscore/correlation.hpp"
#include "wscore/dataset.hpp"
#include "wscore/error.hpp"
#include "wscore/gauss.hpp"
#include "wscore/margins.hpp"
#include "wscore/optim.hpp"
#include "wscore/parallel.hpp"
#include "wscore/selection.hpp"
#include "wscore/weighted_scores.hpp"

namespace wscore {

using Rng = std::mt19937_64;

/// Independent stream for replication `rep`; a pure function of (seed, rep).
inline Rng replication_stream(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32), 0x5eedu};
  return Rng(seq);
}

/// Uniform on the open interval (0, 1).
inline double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = dist(rng);
  while (u <= 0.0) u = dist(rng);
  return u;
}

inline double unit_exponential(Rng& rng) { return -std::log(open_uniform(rng)); }

/// Positive stable variable with Laplace transform exp(-t^alpha), 0 < alpha <= 1
/// (Chambers-Mallows-Stuck / Kanter representation).
inline double sample_positive_stable(double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("positive stable index must lie in (0, 1]");
  if (alpha == 1.0) return 1.0;
  const double u = std::numbers::pi * open_uniform(rng);
  const double e = unit_exponential(rng);
  return std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha) *
         std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
}

/// Rows of d-variate Gumbel copula uniforms, C(u) = exp(-(sum (-log u_j)^theta)^(1/theta)).
inline Eigen::MatrixXd sample_gumbel(int n_rows, int d, double theta, Rng& rng) {
  if (!(theta >= 1.0)) throw DomainError("Gumbel copula parameter must be at least 1");
  if (n_rows < 0 || d < 1) throw DomainError("invalid Gumbel sample shape");
  const double alpha = 1.0 / theta;
  Eigen::MatrixXd u(n_rows, d);
  for (int i = 0; i < n_rows; ++i) {
    const double v = sample_positive_stable(alpha, rng);
    for (int j = 0; j < d; ++j) u(i, j) = std::exp(-std::pow(unit_exponential(rng) / v, alpha));
  }
  return u;
}

enum class CopulaFamily { gumbel, mvn, mvt };

inline std::string copula_name(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::gumbel: return "gumbel";
    case CopulaFamily::mvn: return "mvn";
    case CopulaFamily::mvt: return "mvt";
  }
  return "unknown";
}

inline CopulaFamily parse_copula(const std::string& s) {
  if (s == "gumbel") return CopulaFamily::gumbel;
  if (s == "mvn" || s == "normal") return CopulaFamily::mvn;
  if (s == "mvt" || s == "t") return CopulaFamily::mvt;
  throw InputError("unknown copula family '" + s + "'");
}

/// Rows of normal (or Student t with df degrees of freedom) copula uniforms with correlation R.
inline Eigen::MatrixXd sample_elliptical_copula(int n_rows, const Eigen::MatrixXd& R, CopulaFamily family, double df,
                                                Rng& rng) {
  if (family == CopulaFamily::gumbel) throw DomainError("elliptical sampler needs mvn or mvt");
  if (family == CopulaFamily::mvt && !(df > 0.0)) throw DomainError("t copula needs positive degrees of freedom");
  const auto d = R.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (R.cols() != d || llt.info() != Eigen::Success) throw MatrixError("copula correlation matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi(family == CopulaFamily::mvt ? df : 1.0);
  std::optional<boost::math::students_t> tdist;
  if (family == CopulaFamily::mvt) tdist.emplace(df);
  Eigen::MatrixXd u(n_rows, d);
  Eigen::VectorXd z(d);
  for (int i = 0; i < n_rows; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
    Eigen::VectorXd x = L * z;
    if (family == CopulaFamily::mvn) {
      for (Eigen::Index j = 0; j < d; ++j) u(i, j) = norm_cdf(x[j]);
    } else {
      const double w = std::sqrt(chi(rng) / df);
      for (Eigen::Index j = 0; j < d; ++j) u(i, j) = boost::math::cdf(*tdist, x[j] / w);
    }
  }
  return u;
}

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::gumbel;
  double theta = 1.0;    ///< Gumbel parameter
  Eigen::MatrixXd corr;  ///< elliptical correlation, d x d
  double df = 5.0;       ///< t copula degrees of freedom
};

inline Eigen::MatrixXd sample_copula(const CopulaSpec& spec, int n_rows, int d, Rng& rng) {
  if (spec.family == CopulaFamily::gumbel) return sample_gumbel(n_rows, d, spec.theta, rng);
  if (spec.corr.rows() != d) throw DomainError("copula correlation matrix does not match the cluster dimension");
  return sample_elliptical_copula(n_rows, spec.corr, spec.family, spec.df, rng);
}

/// Smallest category y with u <= F1(y).
inline int ordinalize(double u, const Eigen::VectorXd& g, const Link& link) {
  const int q = static_cast<int>(g.size());
  for (int y = 1; y <= q; ++y)
    if (u <= link.cdf(g[y - 1])) return y;
  return q + 1;
}

/// Cutpoints making K categories equiprobable at nu = 0.
inline Eigen::VectorXd equal_cutpoints(const Link& link, int K) {
  if (K < 2) throw DomainError("need at least two categories");
  Eigen::VectorXd g(K - 1);
  for (int m = 1; m < K; ++m) g[m - 1] = link.quantile(static_cast<double>(m) / K);
  return g;
}

enum class DesignId { efficiency, corr_selection, variable_selection };

inline std::string design_name(DesignId id) {
  switch (id) {
    case DesignId::efficiency: return "efficiency";
    case DesignId::corr_selection: return "corr_selection";
    case DesignId::variable_selection: return "variable_selection";
  }
  return "unknown";
}

inline DesignId parse_design(const std::string& s) {
  if (s == "efficiency") return DesignId::efficiency;
  if (s == "corr_selection") return DesignId::corr_selection;
  if (s == "variable_selection") return DesignId::variable_selection;
  throw InputError("unknown covariate design '" + s + "'");
}

/// Covariates of one sample plus the true coefficients.
struct CovariateDesign {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> x;  ///< per cluster, d x p
  Eigen::VectorXd beta;
  double intercept = 0.0;  ///< true intercept, absorbed by the cutpoints when fitting
};

/// efficiency: x1 cluster-level Bernoulli(1/2), x2 Gumbel(theta=2) uniforms,
/// x3 = x1 * x2, x4 cluster-level uniform on [-1, 1]; beta = (-0.5, 0.5, 0.5, 0).
/// corr_selection: x = (1, x1, j-1) with x1 Bernoulli(1/2); (b0, b1, b2) = (0.25, -0.25, -0.25).
/// variable_selection: as corr_selection plus x3, x4 uniform on [-1, 1]; b3 = b4 = 0.
inline CovariateDesign covariate_design(DesignId id, int n, int d, Rng& rng) {
  CovariateDesign out;
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  out.x.resize(n);
  switch (id) {
    case DesignId::efficiency: {
      out.names = {"x1", "x2", "x3", "x4"};
      out.beta = (Eigen::VectorXd(4) << -0.5, 0.5, 0.5, 0.0).finished();
      const Eigen::MatrixXd u = sample_gumbel(n, d, 2.0, rng);
      for (int i = 0; i < n; ++i) {
        const double x1 = coin(rng) ? 1.0 : 0.0;
        const double x4 = sym(rng);
        Eigen::MatrixXd x(d, 4);
        for (int j = 0; j < d; ++j) x.row(j) << x1, u(i, j), x1 * u(i, j), x4;
        out.x[i] = x;
      }
      break;
    }
    case DesignId::corr_selection:
    case DesignId::variable_selection: {
      const bool noise = id == DesignId::variable_selection;
      out.names = noise ? std::vector<std::string>{"x1", "x2", "x3", "x4"} : std::vector<std::string>{"x1", "x2"};
      out.intercept = 0.25;
      out.beta = Eigen::VectorXd::Zero(noise ? 4 : 2);
      out.beta[0] = -0.25;
      out.beta[1] = -0.25;
      for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd x(d, out.names.size());
        for (int j = 0; j < d; ++j) {
          x(j, 0) = coin(rng) ? 1.0 : 0.0;
          x(j, 1) = j;
          if (noise) {
            x(j, 2) = sym(rng);
            x(j, 3) = sym(rng);
          }
        }
        out.x[i] = x;
      }
      break;
    }
  }
  return out;
}

struct SimDesign {
  DesignId design = DesignId::efficiency;
  int n = 100;
  int d = 3;
  int K = 5;
  int B = 500;
  Link link = Link::probit();
  CopulaSpec copula{CopulaFamily::gumbel, 3.0, {}, 5.0};
  std::optional<Eigen::VectorXd> beta;  ///< overrides the design default
  std::optional<Eigen::VectorXd> gamma;  ///< defaults to equal_cutpoints
  std::uint64_t seed = 20160601;

  void validate() const {
    if (n < 2 || d < 1 || K < 2 || B < 1) throw InputError("simulation sizes must be positive (n >= 2, K >= 2)");
    if (copula.family == CopulaFamily::gumbel && !(copula.theta >= 1.0))
      throw InputError("Gumbel copula parameter must be at least 1");
    if (copula.family == CopulaFamily::mvt && !(copula.df > 0.0)) throw InputError("t copula needs df > 0");
    if (gamma && gamma->size() != K - 1) throw InputError("true cutpoints must have K-1 entries");
  }

  Eigen::VectorXd true_gamma() const { return gamma ? *gamma : equal_cutpoints(link, K); }
};

/// One simulated sample for replication `rep`, together with its covariate truth.
inline OrdinalDataset simulate_dataset(const SimDesign& design, std::uint64_t rep, CovariateDesign* truth = nullptr) {
  design.validate();
  Rng rng = replication_stream(design.seed, rep);
  CovariateDesign cov = covariate_design(design.design, design.n, design.d, rng);
  if (design.beta) {
    if (design.beta->size() != cov.beta.size()) throw InputError("true beta has the wrong length for this design");
    cov.beta = *design.beta;
  }
  const Eigen::MatrixXd u = sample_copula(design.copula, design.n, design.d, rng);
  const Eigen::VectorXd gamma = design.true_gamma();
  OrdinalDataset data;
  data.covariate_names = cov.names;
  data.categories = design.K;
  data.clusters.reserve(design.n);
  for (int i = 0; i < design.n; ++i) {
    Cluster c;
    c.id = std::to_string(i + 1);
    c.x = cov.x[i];
    for (int j = 0; j < design.d; ++j) {
      const double nu = cov.intercept + c.x.row(j).dot(cov.beta);
      c.index.push_back(j + 1);
      c.y.push_back(ordinalize(u(i, j), gamma.array() + nu, design.link));
    }
    data.clusters.push_back(std::move(c));
  }
  if (truth) *truth = std::move(cov);
  return data;
}

// ---------------------------------------------------------------------------
// Maximum likelihood under the exchangeable Gumbel copula (reference estimator).

/// Gumbel copula cdf; zero if any argument is zero.
inline double gumbel_cdf(const std::vector<double>& u, double theta) {
  double s = 0.0;
  for (double v : u) {
    if (v <= 0.0) return 0.0;
    if (v < 1.0) s += std::pow(-std::log(v), theta);
  }
  return std::exp(-std::pow(s, 1.0 / theta));
}

/// Probability of the box (lower, upper] by inclusion-exclusion over the 2^d corners.
inline double gumbel_box(const std::vector<double>& lower, const std::vector<double>& upper, double theta) {
  const std::size_t d = lower.size();
  double total = 0.0;
  std::vector<double> corner(d);
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    int lows = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const bool low = (mask >> j) & 1u;
      corner[j] = low ? lower[j] : upper[j];
      lows += low ? 1 : 0;
    }
    total += (lows % 2 ? -1.0 : 1.0) * gumbel_cdf(corner, theta);
  }
  return total;
}

/// Joint pmf of one cluster's responses with Gumbel dependence.
inline double gumbel_cluster_pmf(const Cluster& c, const UnivariateParams& a, const Link& link, double theta) {
  std::vector<double> lo(c.size()), hi(c.size());
  for (int t = 0; t < c.size(); ++t) {
    const Eigen::VectorXd g = shifted_cutpoints(a, c.x.row(t).transpose());
    lo[t] = category_cdf(link, g, c.y[t] - 1);
    hi[t] = category_cdf(link, g, c.y[t]);
  }
  return gumbel_box(lo, hi, theta);
}

inline double gumbel_loglik(const OrdinalDataset& data, const UnivariateParams& a, const Link& link, double theta) {
  double ll = 0.0;
  for (const auto& c : data.clusters) {
    const double p = gumbel_cluster_pmf(c, a, link, theta);
    if (!(p > 0.0)) return -kInf;
    ll += std::log(p);
  }
  return ll;
}

struct GumbelMlFit {
  UnivariateParams params;
  double theta = 1.0;
  Eigen::VectorXd se;  ///< (beta, gamma, theta)
  double loglik = 0.0;
  bool converged = false;
};

/// Full maximum likelihood over (beta, gamma, theta) for cluster dimension <= 3.
inline GumbelMlFit gumbel_ml_oracle(const OrdinalDataset& data, const Link& link, const UnivariateParams& start,
                                    double theta0 = 1.5) {
  if (data.dimension() > 3) throw DomainError("Gumbel likelihood reference supports cluster dimension up to 3");
  const int p = start.p(), q = start.q();
  // Unconstrained coordinates: beta, gamma_1, log increments of gamma, theta.
  auto pack = [&](const UnivariateParams& a, double theta) {
    Eigen::VectorXd v(p + q + 1);
    v.head(p) = a.beta;
    v[p] = a.gamma[0];
    for (int m = 1; m < q; ++m) v[p + m] = std::log(a.gamma[m] - a.gamma[m - 1]);
    v[p + q] = theta;
    return v;
  };
  auto unpack = [&](const Eigen::VectorXd& v) {
    UnivariateParams a{v.head(p), Eigen::VectorXd(q)};
    a.gamma[0] = v[p];
    for (int m = 1; m < q; ++m) a.gamma[m] = a.gamma[m - 1] + std::exp(v[p + m]);
    return a;
  };
  auto objective = [&](const Eigen::VectorXd& v) {
    double theta = v[p + q], penalty = 0.0;
    if (theta < 1.0) {
      penalty = 1e3 * (1.0 - theta) * (1.0 - theta);
      theta = 1.0;
    }
    const double ll = gumbel_loglik(data, unpack(v), link, theta);
    return std::isfinite(ll) ? -ll + penalty : 1e300;
  };
  const auto best = bfgs_minimize(objective, pack(start, std::max(1.0, theta0)));
  GumbelMlFit fit;
  fit.params = unpack(best.x);
  fit.theta = std::max(1.0, best.x[p + q]);
  fit.loglik = -objective(best.x);
  fit.converged = best.converged;

  // Standard errors in (beta, gamma, theta) coordinates.
  auto natural = [&](const Eigen::VectorXd& w) {
    UnivariateParams a{w.head(p), w.segment(p, q)};
    if (!a.cutpoints_ordered()) return 1e300;
    const double ll = gumbel_loglik(data, a, link, std::max(1.0, w[p + q]));
    return std::isfinite(ll) ? -ll : 1e300;
  };
  Eigen::VectorXd w(p + q + 1);
  w << fit.params.beta, fit.params.gamma, fit.theta;
  const Eigen::MatrixXd info = numeric_hessian(natural, w);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  fit.se = Eigen::VectorXd::Constant(p + q + 1, std::numeric_limits<double>::quiet_NaN());
  if (ldlt.info() == Eigen::Success) {
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p + q + 1, p + q + 1));
    for (int k = 0; k < p + q + 1; ++k)
      if (cov(k, k) > 0.0) fit.se[k] = std::sqrt(cov(k, k));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Replication harness.

struct SimulationPlan {
  SimDesign design;
  Structure structure = Structure::exchangeable;
  std::vector<std::string> fit_covariates;  ///< empty: all design covariates
  bool weighted_scores = true;
  bool gumbel_ml = false;
  std::vector<ModelDescriptor> candidates;  ///< selection study; link is taken from the design
  JMode jmode = JMode::empirical;
  FitOptions fit{};
  int threads = 1;
};

struct CoefficientSummary {
  std::string estimator;
  std::string name;
  double truth = 0.0;
  double n_bias = 0.0;
  double n_sd = 0.0;
  double n_rmse = 0.0;
  double n_sqrt_vbar = 0.0;
  std::array<double, 3> reject{};  ///< at alpha = 0.01, 0.05, 0.10
  int count = 0;
};

struct SelectionCount {
  std::string label;
  int cl1aic = 0;
  int cl1bic = 0;
};

struct SimSummary {
  SimDesign design;
  int replications = 0;
  int completed = 0;
  int failed = 0;
  std::vector<std::string> failures;
  std::vector<CoefficientSummary> coefficients;
  std::vector<SelectionCount> selection;
};

inline constexpr std::array<double, 3> kTestLevels{0.01, 0.05, 0.10};

namespace detail {

struct EstimatorDraw {
  Eigen::VectorXd est;  // table order: cutpoints then covariates
  Eigen::VectorXd se;
};

struct ReplicationResult {
  bool ok = false;
  std::string error;
  std::map<std::string, EstimatorDraw> draws;
  std::string winner_aic, winner_bic;
};

inline CoefficientSummary summarize(const std::string& estimator, const std::string& name, double truth,
                                    const std::vector<double>& est, const std::vector<double>& se, int n) {
  CoefficientSummary s{estimator, name, truth};
  const auto B = static_cast<double>(est.size());
  s.count = static_cast<int>(est.size());
  if (est.empty()) return s;
  double mean = 0.0, mse = 0.0, v = 0.0;
  for (double e : est) mean += e;
  mean /= B;
  for (double e : est) mse += (e - truth) * (e - truth);
  mse /= B;
  double ss = 0.0;
  for (double e : est) ss += (e - mean) * (e - mean);
  const double sd = est.size() > 1 ? std::sqrt(ss / (B - 1.0)) : 0.0;
  int finite_se = 0;
  for (double x : se)
    if (std::isfinite(x)) {
      v += x * x;
      ++finite_se;
    }
  s.n_bias = n * (mean - truth);
  s.n_sd = n * sd;
  s.n_rmse = n * std::sqrt(mse);
  s.n_sqrt_vbar = finite_se > 0 ? n * std::sqrt(v / finite_se) : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t l = 0; l < kTestLevels.size(); ++l) {
    const double crit = norm_quantile(1.0 - kTestLevels[l] / 2.0);
    int rejects = 0, tests = 0;
    for (std::size_t b = 0; b < est.size(); ++b) {
      if (!(se[b] > 0.0) || !std::isfinite(se[b])) continue;
      ++tests;
      if (std::abs(est[b] - truth) / se[b] > crit) ++rejects;
    }
    s.reject[l] = tests > 0 ? static_cast<double>(rejects) / tests : std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

}  // namespace detail

/// Runs B replications; replication r uses replication_stream(seed, r), so
/// results do not depend on the number of workers.
inline SimSummary run_replications(const SimulationPlan& plan) {
  const SimDesign& design = plan.design;
  design.validate();
  std::vector<detail::ReplicationResult> results(design.B);
  std::vector<std::string> names;
  Eigen::VectorXd truth;
  {
    CovariateDesign cov;
    const auto probe = simulate_dataset(design, 0, &cov);
    std::vector<std::string> covs = plan.fit_covariates.empty() ? cov.names : plan.fit_covariates;
    const Eigen::VectorXd gamma = design.true_gamma().array() + cov.intercept;
    truth.resize(gamma.size() + covs.size());
    truth.head(gamma.size()) = gamma;
    for (std::size_t k = 0; k < covs.size(); ++k) {
      auto it = std::find(cov.names.begin(), cov.names.end(), covs[k]);
      if (it == cov.names.end()) throw InputError("unknown design covariate '" + covs[k] + "'");
      truth[gamma.size() + k] = cov.beta[it - cov.names.begin()];
    }
    for (int m = 1; m < design.K; ++m) names.push_back("alpha" + std::to_string(m));
    names.insert(names.end(), covs.begin(), covs.end());
  }
  const int q = design.K - 1;

  parallel_for(static_cast<std::size_t>(design.B), plan.threads, [&](std::size_t rep) {
    auto& out = results[rep];
    try {
      const auto full = simulate_dataset(design, rep);
      const auto data = plan.fit_covariates.empty() ? full : select_covariates(full, plan.fit_covariates);
      if (plan.weighted_scores) {
        const auto fit = solve_weighted_scores(data, design.link, plan.structure, plan.fit);
        detail::EstimatorDraw dr{Eigen::VectorXd(fit.estimates.size()), Eigen::VectorXd(fit.estimates.size())};
        for (std::size_t k = 0; k < fit.estimates.size(); ++k) {
          dr.est[k] = fit.estimates[k].est;
          dr.se[k] = fit.estimates[k].se;
        }
        out.draws["WS"] = dr;
      }
      if (plan.gumbel_ml) {
        const auto start = fit_independent(data, design.link, plan.fit);
        const auto ml = gumbel_ml_oracle(data, design.link, start.params);
        const int p = ml.params.p();
        detail::EstimatorDraw dr{Eigen::VectorXd(p + q), Eigen::VectorXd(p + q)};
        dr.est << ml.params.gamma, ml.params.beta;
        dr.se << ml.se.segment(p, q), ml.se.head(p);
        out.draws["ML"] = dr;
      }
      if (!plan.candidates.empty()) {
        std::vector<ModelDescriptor> cands = plan.candidates;
        for (auto& c : cands) c.link = design.link;
        auto search = model_search(full, cands, Criterion::cl1aic, plan.jmode, plan.fit, 1);
        if (search.ranked.empty()) throw NumericalError("every candidate model failed");
        out.winner_aic = search.ranked.front().model.label();
        rank_reports(search.ranked, Criterion::cl1bic);
        out.winner_bic = search.ranked.front().model.label();
      }
      out.ok = true;
    } catch (const Error& e) {
      out.error = e.what();
    }
  });

  SimSummary summary;
  summary.design = design;
  summary.replications = design.B;
  for (const auto& r : results) {
    if (r.ok) {
      ++summary.completed;
    } else {
      ++summary.failed;
      if (summary.failures.size() < 10) summary.failures.push_back(r.error);
    }
  }
  if (summary.failed > 0.05 * design.B)
    throw NumericalError(std::to_string(summary.failed) + " of " + std::to_string(design.B) +
                         " replications failed (more than 5%); first error: " +
                         (summary.failures.empty() ? std::string("?") : summary.failures.front()));

  for (const std::string estimator : {"WS", "ML"}) {
    const bool on = estimator == "WS" ? plan.weighted_scores : plan.gumbel_ml;
    if (!on) continue;
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::vector<double> est, se;
      for (const auto& r : results) {
        if (!r.ok) continue;
        const auto& dr = r.draws.at(estimator);
        est.push_back(dr.est[k]);
        se.push_back(dr.se[k]);
      }
      summary.coefficients.push_back(detail::summarize(estimator, names[k], truth[k], est, se, design.n));
    }
  }
  for (const auto& c : plan.candidates) {
    ModelDescriptor m = c;
    m.link = design.link;
    SelectionCount sc{m.label()};
    for (const auto& r : results) {
      if (!r.ok) continue;
      sc.cl1aic += r.winner_aic == sc.label ? 1 : 0;
      sc.cl1bic += r.winner_bic == sc.label ? 1 : 0;
    }
    summary.selection.push_back(sc);
  }
  return summary;
}

}  // namespace wscore

#endif  // WSCORE_SIMULATE_HPP
