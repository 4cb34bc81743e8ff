// wscore: weighted scores fits, CL1 model selection and simulation studies
// for clustered ordinal responses.
//
//   wscore fit --data arthritis.csv --id-col id --time-col time --y-col y \
//       --covariates time:adjacent,trt,baseline:adjacent,age --link logit --corr exch
//   wscore select --data ... --links logit,probit --subsets "time trt baseline age" ...
//   wscore simulate --design efficiency --n 100 --B 500 --seed 7 --out sim.json
//
// Exit codes: 0 success, 1 input or configuration error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wscore/wscore.hpp"

using namespace wscore;

namespace {

struct Flags {
  std::string config_path, out;
  RunConfig cfg;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_json(const std::string& path, const Json& doc) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << doc.dump(2) << '\n';
}

IngestResult load(const RunConfig& c) {
  if (c.data.empty()) throw InputError("no data file given (--data)");
  IngestSpec spec;
  spec.id_col = c.id_col;
  spec.time_col = c.time_col;
  spec.y_col = c.y_col;
  spec.covariates = parse_covariate_spec(c.covariates);
  auto res = ingest_csv(c.data, spec);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "data: " << res.data.num_clusters() << " clusters, K=" << res.data.categories << ", response levels";
  for (std::size_t k = 0; k < res.response_levels.size(); ++k)
    std::cerr << ' ' << res.response_levels[k] << "->" << k + 1;
  std::cerr << '\n';
  return res;
}

int cmd_fit(const Flags& f, std::string& stage) {
  const RunConfig& c = f.cfg;
  stage = "ingest";
  const auto in = load(c);
  const Link link = Link::parse(c.link);
  const Structure structure = parse_structure(c.corr);
  stage = "fit";
  const auto fit = solve_weighted_scores(in.data, link, structure, c.fit_options());
  std::optional<CriteriaReport> crit;
  if (c.criteria) {
    stage = "criteria";
    crit = cl1_criteria(in.data, {link, structure, in.data.covariate_names}, parse_jmode(c.jmat), c.fit_options());
  }
  print_fit(std::cout, fit, crit);
  write_json(f.out, fit_json(c, fit, crit, in.warnings));
  return 0;
}

int cmd_select(const Flags& f, std::string& stage) {
  const RunConfig& c = f.cfg;
  stage = "ingest";
  const auto in = load(c);
  std::vector<Link> links;
  for (const auto& l : c.links.empty() ? std::vector<std::string>{c.link} : c.links) links.push_back(Link::parse(l));
  std::vector<Structure> structures;
  for (const auto& s : c.structures.empty() ? std::vector<std::string>{"exch", "ar1", "unstr"} : c.structures)
    structures.push_back(parse_structure(s));
  const Criterion by = parse_criterion(c.rank_by);
  const JMode mode = parse_jmode(c.jmat);

  stage = "select";
  std::vector<ModelDescriptor> panel;
  for (const auto& link : links)
    for (auto s : structures) panel.push_back({link, s, in.data.covariate_names});
  const auto structure_search = model_search(in.data, panel, by, mode, c.fit_options(), c.threads);
  std::cout << "Correlation structure selection (all covariates)\n";
  print_search(std::cout, structure_search);
  Json doc{{"config", to_json(c)}, {"structures", search_json(c, structure_search)}};
  doc["structures"].erase("config");

  if (!c.subsets.empty()) {
    std::vector<ModelDescriptor> subsets;
    for (const auto& link : links)
      for (const auto& sub : c.subsets)
        subsets.push_back({link, parse_structure(c.corr), expanded_columns(in.data.covariate_names, split(sub, ' '))});
    const auto variable_search = model_search(in.data, subsets, by, mode, c.fit_options(), c.threads);
    std::cout << "\nVariable selection (" << structure_name(parse_structure(c.corr)) << ")\n";
    print_search(std::cout, variable_search);
    doc["subsets"] = search_json(c, variable_search);
    doc["subsets"].erase("config");
  }
  write_json(f.out, doc);
  return 0;
}

int cmd_simulate(const Flags& f, std::string& stage) {
  stage = "simulate";
  const auto plan = simulation_plan(f.cfg);
  std::cerr << "seed " << plan.design.seed << '\n';
  const auto summary = run_replications(plan);
  print_simulation(std::cout, summary);
  write_json(f.out, simulation_json(f.cfg, summary));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted scores estimation and CL1 model selection for clustered ordinal data"};
  app.require_subcommand(1);
  Flags f;
  RunConfig& c = f.cfg;
  std::string links, structures;
  std::vector<std::string> subsets;

  app.add_option("--config", f.config_path, "JSON configuration; explicit flags override it");
  app.add_option("--out", f.out, "write a JSON report to this path");
  app.add_option("--data", c.data, "long-format CSV, one row per measurement");
  app.add_option("--id-col", c.id_col, "cluster id column");
  app.add_option("--time-col", c.time_col, "within-cluster time column (default: row order)");
  app.add_option("--y-col", c.y_col, "ordinal response column");
  app.add_option("--covariates", c.covariates, "comma list of col[:numeric|adjacent|dummy]");
  app.add_option("--link", c.link, "probit or logit");
  app.add_option("--corr", c.corr, "exch, ar1, unstr or independence");
  app.add_option("--links", links, "select: comma list of links");
  app.add_option("--structures", structures, "select: comma list of structures");
  app.add_option("--subsets", subsets, "select: covariate column subsets, each space separated");
  app.add_flag("--criteria", c.criteria, "fit: also compute CL1AIC and CL1BIC");
  app.add_option("--rank-by", c.rank_by, "cl1aic or cl1bic");
  app.add_option("--jmat", c.jmat, "empirical or model");
  app.add_option("--score-tol", c.score_tol);
  app.add_option("--step-tol", c.step_tol);
  app.add_option("--max-iter", c.max_iter);
  app.add_option("--mvn-tol", c.mvn_tol);
  app.add_option("--seed", c.seed);
  app.add_option("--threads", c.threads, "worker threads (0: hardware concurrency)");
  app.add_option("--design", c.sim.design, "efficiency, corr_selection or variable_selection");
  app.add_option("--n", c.sim.n);
  app.add_option("--d", c.sim.d);
  app.add_option("--K", c.sim.K);
  app.add_option("--B", c.sim.B);
  app.add_option("--copula", c.sim.copula, "gumbel, mvn or mvt");
  app.add_option("--theta", c.sim.theta, "Gumbel copula parameter");
  app.add_option("--rho", c.sim.rho, "exchangeable correlation of mvn / mvt copulas");
  app.add_option("--df", c.sim.df);
  app.add_flag("--gumbel-ml", c.sim.gumbel_ml, "also fit the Gumbel copula by maximum likelihood");
  app.add_option("--selection", c.sim.selection, "structures or variables");

  auto* fit = app.add_subcommand("fit", "weighted scores fit with sandwich inference")->fallthrough();
  auto* select = app.add_subcommand("select", "rank candidate models by CL1AIC / CL1BIC")->fallthrough();
  auto* simulate = app.add_subcommand("simulate", "replication study")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  std::string stage = "config";
  try {
    if (!f.config_path.empty()) {
      // Start from the file, then re-apply every flag given on the command line.
      std::ifstream in(f.config_path);
      if (!in) throw InputError("cannot open config '" + f.config_path + "'");
      Json j;
      try {
        j = Json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
      }
      if (j.contains("config") && j.at("config").is_object()) j = j.at("config");  // a previous report
      RunConfig merged = config_from_json(j);
      for (const auto* opt : app.get_options()) {
        if (opt->count() == 0) continue;
        const std::string name = opt->get_name();
        if (name == "--data") merged.data = c.data;
        else if (name == "--id-col") merged.id_col = c.id_col;
        else if (name == "--time-col") merged.time_col = c.time_col;
        else if (name == "--y-col") merged.y_col = c.y_col;
        else if (name == "--covariates") merged.covariates = c.covariates;
        else if (name == "--link") merged.link = c.link;
        else if (name == "--corr") merged.corr = c.corr;
        else if (name == "--criteria") merged.criteria = c.criteria;
        else if (name == "--rank-by") merged.rank_by = c.rank_by;
        else if (name == "--jmat") merged.jmat = c.jmat;
        else if (name == "--score-tol") merged.score_tol = c.score_tol;
        else if (name == "--step-tol") merged.step_tol = c.step_tol;
        else if (name == "--max-iter") merged.max_iter = c.max_iter;
        else if (name == "--mvn-tol") merged.mvn_tol = c.mvn_tol;
        else if (name == "--seed") merged.seed = c.seed;
        else if (name == "--threads") merged.threads = c.threads;
        else if (name == "--design") merged.sim.design = c.sim.design;
        else if (name == "--n") merged.sim.n = c.sim.n;
        else if (name == "--d") merged.sim.d = c.sim.d;
        else if (name == "--K") merged.sim.K = c.sim.K;
        else if (name == "--B") merged.sim.B = c.sim.B;
        else if (name == "--copula") merged.sim.copula = c.sim.copula;
        else if (name == "--theta") merged.sim.theta = c.sim.theta;
        else if (name == "--rho") merged.sim.rho = c.sim.rho;
        else if (name == "--df") merged.sim.df = c.sim.df;
        else if (name == "--gumbel-ml") merged.sim.gumbel_ml = c.sim.gumbel_ml;
        else if (name == "--selection") merged.sim.selection = c.sim.selection;
      }
      if (!links.empty()) merged.links.clear();
      if (!structures.empty()) merged.structures.clear();
      if (!subsets.empty()) merged.subsets.clear();
      c = merged;
    }
    for (const auto& l : split(links, ',')) c.links.push_back(l);
    for (const auto& s : split(structures, ',')) c.structures.push_back(s);
    for (const auto& s : subsets) c.subsets.push_back(s);
    c.validate();

    if (fit->parsed()) return cmd_fit(f, stage);
    if (select->parsed()) return cmd_select(f, stage);
    if (simulate->parsed()) return cmd_simulate(f, stage);
  } catch (const InputError& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
