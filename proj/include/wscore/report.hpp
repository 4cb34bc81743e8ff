#ifndef WSCORE_REPORT_HPP
#define WSCORE_REPORT_HPP

// Run configuration, JSON documents and plain-text tables for fits, criteria
// and simulation summaries. Tables round (estimates 3 decimals, criteria 2);
// JSON keeps full double precision.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wscore/correlation.hpp"
#include "wscore/error.hpp"
#include "wscore/gauss.hpp"
#include "wscore/margins.hpp"
#include "wscore/selection.hpp"
#include "wscore/simulate.hpp"
#include "wscore/weighted_scores.hpp"

namespace wscore {

using Json = nlohmann::ordered_json;

struct SimConfig {
  std::string design = "efficiency";
  int n = 100;
  int d = 3;
  int K = 5;
  int B = 500;
  std::string copula = "gumbel";
  double theta = 3.0;
  double df = 5.0;
  double rho = 0.5;  ///< exchangeable correlation for mvn / mvt copulas
  std::vector<double> beta;
  std::vector<double> gamma;
  bool gumbel_ml = false;
  /// Selection study: "structures" ranks exch / ar1 / unstr, "variables" ranks
  /// covariate subsets under the fitted structure, "" fits a single model.
  std::string selection;
};

struct RunConfig {
  std::string data;
  std::string id_col = "id";
  std::string time_col;
  std::string y_col = "y";
  std::string covariates;
  std::string link = "probit";
  std::string corr = "exch";
  std::vector<std::string> links;       ///< select: links to compare (default: link)
  std::vector<std::string> structures;  ///< select: default exch, ar1, unstr
  std::vector<std::string> subsets;     ///< select: covariate column subsets, space separated
  bool criteria = false;                ///< fit: also report CL1AIC / CL1BIC
  std::string rank_by = "cl1bic";
  std::string jmat = "empirical";
  double score_tol = 1e-6;
  double step_tol = 1e-8;
  int max_iter = 100;
  double mvn_tol = 1e-6;
  std::uint64_t seed = 20160601;
  int threads = 1;
  SimConfig sim;

  void validate() const {
    Link::parse(link);
    for (const auto& l : links) Link::parse(l);
    parse_structure(corr);
    for (const auto& s : structures) parse_structure(s);
    parse_jmode(jmat);
    parse_criterion(rank_by);
    parse_design(sim.design);
    parse_copula(sim.copula);
    if (!(score_tol > 0) || !(step_tol > 0) || !(mvn_tol > 0)) throw InputError("tolerances must be positive");
    if (max_iter < 1) throw InputError("max_iter must be at least 1");
    if (threads < 0) throw InputError("threads must be non-negative");
  }

  FitOptions fit_options() const {
    FitOptions o;
    o.score_tol = score_tol;
    o.step_tol = step_tol;
    o.max_iter = max_iter;
    o.mvn.tolerance = mvn_tol;
    return o;
  }
};

inline Json to_json(const RunConfig& c) {
  Json sim{{"design", c.sim.design}, {"n", c.sim.n},         {"d", c.sim.d},           {"K", c.sim.K},
           {"B", c.sim.B},           {"copula", c.sim.copula}, {"theta", c.sim.theta}, {"df", c.sim.df},
           {"rho", c.sim.rho},       {"beta", c.sim.beta},   {"gamma", c.sim.gamma},   {"gumbel_ml", c.sim.gumbel_ml},
           {"selection", c.sim.selection}};
  return Json{{"data", c.data},
              {"id_col", c.id_col},
              {"time_col", c.time_col},
              {"y_col", c.y_col},
              {"covariates", c.covariates},
              {"link", c.link},
              {"corr", c.corr},
              {"links", c.links},
              {"structures", c.structures},
              {"subsets", c.subsets},
              {"criteria", c.criteria},
              {"rank_by", c.rank_by},
              {"jmat", c.jmat},
              {"score_tol", c.score_tol},
              {"step_tol", c.step_tol},
              {"max_iter", c.max_iter},
              {"mvn_tol", c.mvn_tol},
              {"seed", c.seed},
              {"threads", c.threads},
              {"simulation", sim}};
}

/// Reads a configuration; missing keys keep their defaults, unknown keys are errors.
inline RunConfig config_from_json(const Json& j) {
  RunConfig c;
  const Json ref = to_json(c);
  for (const auto& [key, value] : j.items())
    if (!ref.contains(key) && key != "command") throw InputError("unknown configuration key '" + key + "'");
  auto get = [&](const Json& src, const char* key, auto& field) {
    if (!src.contains(key)) return;
    try {
      src.at(key).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("configuration key '") + key + "': " + e.what());
    }
  };
  get(j, "data", c.data);
  get(j, "id_col", c.id_col);
  get(j, "time_col", c.time_col);
  get(j, "y_col", c.y_col);
  get(j, "covariates", c.covariates);
  get(j, "link", c.link);
  get(j, "corr", c.corr);
  get(j, "links", c.links);
  get(j, "structures", c.structures);
  get(j, "subsets", c.subsets);
  get(j, "criteria", c.criteria);
  get(j, "rank_by", c.rank_by);
  get(j, "jmat", c.jmat);
  get(j, "score_tol", c.score_tol);
  get(j, "step_tol", c.step_tol);
  get(j, "max_iter", c.max_iter);
  get(j, "mvn_tol", c.mvn_tol);
  get(j, "seed", c.seed);
  get(j, "threads", c.threads);
  if (j.contains("simulation")) {
    const Json& s = j.at("simulation");
    const Json sref = ref.at("simulation");
    for (const auto& [key, value] : s.items())
      if (!sref.contains(key)) throw InputError("unknown simulation key '" + key + "'");
    get(s, "design", c.sim.design);
    get(s, "n", c.sim.n);
    get(s, "d", c.sim.d);
    get(s, "K", c.sim.K);
    get(s, "B", c.sim.B);
    get(s, "copula", c.sim.copula);
    get(s, "theta", c.sim.theta);
    get(s, "df", c.sim.df);
    get(s, "rho", c.sim.rho);
    get(s, "beta", c.sim.beta);
    get(s, "gamma", c.sim.gamma);
    get(s, "gumbel_ml", c.sim.gumbel_ml);
    get(s, "selection", c.sim.selection);
  }
  c.validate();
  return c;
}

/// Replication plan for the simulate workflow.
inline SimulationPlan simulation_plan(const RunConfig& c) {
  c.validate();
  SimulationPlan plan;
  SimDesign& d = plan.design;
  d.design = parse_design(c.sim.design);
  d.n = c.sim.n;
  d.d = c.sim.d;
  d.K = c.sim.K;
  d.B = c.sim.B;
  d.link = Link::parse(c.link);
  d.seed = c.seed;
  d.copula.family = parse_copula(c.sim.copula);
  d.copula.theta = c.sim.theta;
  d.copula.df = c.sim.df;
  if (d.copula.family != CopulaFamily::gumbel) {
    d.copula.corr = Eigen::MatrixXd::Constant(d.d, d.d, c.sim.rho);
    d.copula.corr.diagonal().setOnes();
  }
  if (!c.sim.beta.empty()) d.beta = Eigen::Map<const Eigen::VectorXd>(c.sim.beta.data(), c.sim.beta.size());
  if (!c.sim.gamma.empty()) d.gamma = Eigen::Map<const Eigen::VectorXd>(c.sim.gamma.data(), c.sim.gamma.size());
  d.validate();
  plan.structure = parse_structure(c.corr);
  plan.gumbel_ml = c.sim.gumbel_ml;
  plan.jmode = parse_jmode(c.jmat);
  plan.fit = c.fit_options();
  plan.threads = c.threads;
  Rng probe_rng = replication_stream(d.seed, 0);
  const auto names = covariate_design(d.design, 2, d.d, probe_rng).names;
  if (c.sim.selection == "structures") {
    plan.weighted_scores = false;
    for (auto s : {Structure::exchangeable, Structure::ar1, Structure::unstructured})
      plan.candidates.push_back({d.link, s, names});
  } else if (c.sim.selection == "variables") {
    plan.weighted_scores = false;
    for (std::size_t k = 1; k <= names.size(); ++k)
      plan.candidates.push_back({d.link, plan.structure, std::vector<std::string>(names.begin(), names.begin() + k)});
  } else if (!c.sim.selection.empty()) {
    throw InputError("unknown selection study '" + c.sim.selection + "' (use structures or variables)");
  }
  return plan;
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

inline Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json correlation_json(const CorrelationModel& m) {
  return Json{{"structure", structure_name(m.structure())}, {"params", vector_json(m.theta())},
              {"matrix", matrix_json(m.matrix())}};
}

inline Json criteria_json(const CriteriaReport& r) {
  return Json{{"cl1aic", r.cl1aic}, {"cl1bic", r.cl1bic}, {"L2", r.L2}, {"trace", r.penalty_trace},
              {"parameters", r.parameters}};
}

/// JSON document for one fit; `criteria` is null when not requested.
inline Json fit_json(const RunConfig& config, const FitReport& fit, const std::optional<CriteriaReport>& criteria,
                     const std::vector<std::string>& notes = {}) {
  Json est = Json::array();
  for (const auto& e : fit.estimates) est.push_back({{"name", e.name}, {"est", e.est}, {"se", e.se}, {"z", e.z}, {"p", e.p}});
  std::vector<std::string> warnings = notes;
  warnings.insert(warnings.end(), fit.info.warnings.begin(), fit.info.warnings.end());
  return Json{{"config", to_json(config)},
              {"estimates", est},
              {"correlation", correlation_json(fit.correlation.model)},
              {"criteria", criteria ? criteria_json(*criteria) : Json(nullptr)},
              {"diagnostics",
               {{"iterations", fit.info.iterations},
                {"max_score", fit.info.max_score},
                {"cl1_loglik", fit.correlation.loglik},
                {"warnings", warnings}}}};
}

inline Json search_json(const RunConfig& config, const SearchResult& result) {
  Json rows = Json::array();
  for (const auto& r : result.ranked) {
    Json row{{"model", r.model.label()},
             {"link", r.model.link.name()},
             {"structure", structure_name(r.model.structure)},
             {"covariates", r.model.covariates},
             {"criteria", criteria_json(r)},
             {"correlation", correlation_json(r.correlation)},
             {"warnings", r.warnings}};
    rows.push_back(row);
  }
  Json failed = Json::array();
  for (const auto& f : result.failed) failed.push_back({{"model", f.model.label()}, {"error", f.message}});
  return Json{{"config", to_json(config)}, {"models", rows}, {"failed", failed}};
}

inline Json simulation_json(const RunConfig& config, const SimSummary& s) {
  Json coef = Json::array();
  for (const auto& c : s.coefficients)
    coef.push_back({{"estimator", c.estimator},
                    {"name", c.name},
                    {"truth", c.truth},
                    {"n_bias", c.n_bias},
                    {"n_sd", c.n_sd},
                    {"n_rmse", c.n_rmse},
                    {"n_sqrt_vbar", c.n_sqrt_vbar},
                    {"reject", {{"0.01", c.reject[0]}, {"0.05", c.reject[1]}, {"0.10", c.reject[2]}}},
                    {"count", c.count}});
  Json sel = Json::array();
  for (const auto& c : s.selection) sel.push_back({{"model", c.label}, {"cl1aic", c.cl1aic}, {"cl1bic", c.cl1bic}});
  return Json{{"config", to_json(config)},
              {"seed", s.design.seed},
              {"replications", s.replications},
              {"completed", s.completed},
              {"failed", s.failed},
              {"failures", s.failures},
              {"coefficients", coef},
              {"selection", sel}};
}

namespace detail {
inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string pvalue(double p) { return p < 0.001 ? std::string("<0.001") : fmt("%.3f", p); }
}  // namespace detail

inline void print_fit(std::ostream& os, const FitReport& fit, const std::optional<CriteriaReport>& criteria) {
  os << "Weighted scores fit (" << fit.link.name() << " link, " << structure_name(fit.correlation.model.structure())
     << " working correlation)\n";
  std::size_t w = 12;
  for (const auto& e : fit.estimates) w = std::max(w, e.name.size() + 2);
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %9s %8s %8s %8s\n", static_cast<int>(w), "", "Est.", "SE", "Z", "p-value");
  os << line;
  for (const auto& e : fit.estimates) {
    std::snprintf(line, sizeof line, "%-*s %9.3f %8.3f %8.3f %8s\n", static_cast<int>(w), e.name.c_str(), e.est, e.se, e.z,
                  detail::pvalue(e.p).c_str());
    os << line;
  }
  const auto& th = fit.correlation.model.theta();
  if (th.size() > 0) {
    os << "correlation parameters:";
    for (Eigen::Index k = 0; k < th.size(); ++k) os << ' ' << detail::fmt("%.4f", th[k]);
    os << '\n';
  }
  os << "iterations: " << fit.info.iterations << ", max |score|: " << detail::fmt("%.2e", fit.info.max_score) << '\n';
  if (criteria) {
    os << "CL1AIC " << detail::fmt("%.2f", criteria->cl1aic) << "  CL1BIC " << detail::fmt("%.2f", criteria->cl1bic)
       << "  L2 " << detail::fmt("%.2f", criteria->L2) << "  trace " << detail::fmt("%.3f", criteria->penalty_trace)
       << '\n';
  }
}

/// Minimum per criterion is flagged with '*'; failed candidates are listed as FAILED.
inline void print_search(std::ostream& os, const SearchResult& result) {
  std::size_t w = 10;
  for (const auto& r : result.ranked) w = std::max(w, r.model.label().size() + 2);
  for (const auto& f : result.failed) w = std::max(w, f.model.label().size() + 2);
  double best_aic = INFINITY, best_bic = INFINITY;
  for (const auto& r : result.ranked) {
    best_aic = std::min(best_aic, r.cl1aic);
    best_bic = std::min(best_bic, r.cl1bic);
  }
  char line[512];
  std::snprintf(line, sizeof line, "%-*s %11s %11s %11s %8s\n", static_cast<int>(w), "model", "CL1AIC", "CL1BIC", "L2", "trace");
  os << line;
  for (const auto& r : result.ranked) {
    std::snprintf(line, sizeof line, "%-*s %10.2f%s %10.2f%s %11.2f %8.3f\n", static_cast<int>(w), r.model.label().c_str(),
                  r.cl1aic, r.cl1aic == best_aic ? "*" : " ", r.cl1bic, r.cl1bic == best_bic ? "*" : " ", r.L2,
                  r.penalty_trace);
    os << line;
  }
  for (const auto& f : result.failed) {
    std::snprintf(line, sizeof line, "%-*s %11s  %s\n", static_cast<int>(w), f.model.label().c_str(), "FAILED",
                  f.message.c_str());
    os << line;
  }
}

inline void print_simulation(std::ostream& os, const SimSummary& s) {
  os << "design " << design_name(s.design.design) << ", n=" << s.design.n << ", d=" << s.design.d << ", K=" << s.design.K
     << ", B=" << s.replications << " (" << s.completed << " completed), seed " << s.design.seed << '\n';
  char line[256];
  if (!s.coefficients.empty()) {
    std::snprintf(line, sizeof line, "%-4s %-10s %8s %9s %9s %9s %9s %7s %7s %7s\n", "", "", "truth", "n*bias", "n*SD",
                  "n*RMSE", "n*sqrtV", "r.01", "r.05", "r.10");
    os << line;
    for (const auto& c : s.coefficients) {
      std::snprintf(line, sizeof line, "%-4s %-10s %8.3f %9.3f %9.3f %9.3f %9.3f %7.3f %7.3f %7.3f\n", c.estimator.c_str(),
                    c.name.c_str(), c.truth, c.n_bias, c.n_sd, c.n_rmse, c.n_sqrt_vbar, c.reject[0], c.reject[1],
                    c.reject[2]);
      os << line;
    }
  }
  if (!s.selection.empty()) {
    os << "selection counts (CL1AIC / CL1BIC):\n";
    for (const auto& c : s.selection) os << "  " << c.label << ": " << c.cl1aic << " / " << c.cl1bic << '\n';
  }
}

}  // namespace wscore

#endif  // WSCORE_REPORT_HPP
