#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "startrek/ggm.hpp"
#include "startrek/harness.hpp"
#include "startrek/io.hpp"
#include "startrek/multitask.hpp"
#include "startrek/quantile.hpp"
#include "startrek/rng.hpp"
#include "startrek/solvers.hpp"
#include "startrek/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace startrek;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_json_file(const fs::path& path, json j) {
  // generated_at is the only field determinism diffs need to mask
  j["generated_at"] = timestamp_now();
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json rng_metadata(std::uint64_t seed) {
  return {{"generator", rng_generator_name()}, {"seed", seed}};
}

void write_alpha_csv(const fs::path& path, const Vector& alpha,
                     const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "label,alpha\n";
  char buf[128];
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", alpha[j]);
    out << labels[j] << ',' << buf << '\n';
  }
}

struct SelectArgs {
  std::string data, out, lambda = "cv";
  int k_tau = 3, boot = 4000, threads = 0;
  double q = 0.1;
  std::uint64_t seed = 0;
  bool standardize = false, log_transform = false;
};

int run_select(const SelectArgs& a) {
  DataMatrix data = io::load_matrix(a.data);
  if (a.standardize || a.log_transform)
    data = io::preprocess(data, a.log_transform, a.standardize);

  harness::GgmSelectOptions opt;
  opt.k_tau = a.k_tau;
  opt.q = a.q;
  opt.B = a.boot;
  opt.seed = a.seed;
  opt.threads = a.threads;
  if (a.lambda == "cv") {
    opt.lambda_policy = "cv";
  } else {
    opt.lambda_policy = "fixed";
    try {
      opt.lambda_fixed = std::stod(a.lambda);
    } catch (...) {
      throw ConfigError("--lambda must be 'cv' or a number, got '" + a.lambda + "'");
    }
    if (opt.lambda_fixed < 0) throw ConfigError("--lambda must be nonnegative");
  }

  auto out = harness::ggm_select(data.values, opt);

  fs::create_directories(a.out);
  json j;
  j["tool_version"] = kVersion;
  j["rng"] = rng_metadata(a.seed);
  j["config"] = {{"data", a.data},       {"k_tau", a.k_tau},
                 {"q", a.q},             {"boot", a.boot},
                 {"seed", a.seed},       {"lambda", a.lambda},
                 {"standardize", a.standardize}, {"log_transform", a.log_transform}};
  j["lambda_used"] = out.lambda_used;
  j["alpha"] = std::vector<double>(out.result.alpha.data(),
                                   out.result.alpha.data() + out.result.alpha.size());
  j["j_max"] = out.result.j_max;
  j["bh_threshold"] = out.result.bh_threshold;
  json sel = json::array();
  for (int idx : out.result.selected) sel.push_back(data.labels[idx]);
  j["selected"] = sel;
  j["selected_indices"] = out.result.selected;
  write_json_file(fs::path(a.out) / "selection.json", j);
  write_alpha_csv(fs::path(a.out) / "alpha.csv", out.result.alpha, data.labels);
  return 0;
}

struct MultitaskArgs {
  std::string data, response, out;
  int k_tau = 3, boot = 4000, threads = 0;
  double q = 0.1, mu_a = 1.0, lambda_c = 1.1;
  std::uint64_t seed = 0;
};

int run_select_multitask(const MultitaskArgs& a) {
  DataMatrix X = io::load_matrix(a.data);
  DataMatrix Y = io::load_matrix(a.response);
  multitask::MultitaskConfig mcfg;
  mcfg.mu_a = a.mu_a;
  mcfg.lambda_c = a.lambda_c;
  mcfg.threads = a.threads;
  auto fit = multitask::fit_multitask(X.values, Y.values, mcfg);
  select::HypothesisConfig hcfg{a.k_tau, a.q};
  auto sel = multitask::select_hub_responses(fit, hcfg, a.boot, a.seed, a.threads);

  fs::create_directories(a.out);
  json j;
  j["tool_version"] = kVersion;
  j["rng"] = rng_metadata(a.seed);
  j["config"] = {{"data", a.data}, {"response", a.response}, {"k_tau", a.k_tau},
                 {"q", a.q},       {"boot", a.boot},         {"seed", a.seed},
                 {"mu_a", a.mu_a}, {"lambda_c", a.lambda_c}};
  j["alpha"] =
      std::vector<double>(sel.alpha.data(), sel.alpha.data() + sel.alpha.size());
  j["j_max"] = sel.j_max;
  j["bh_threshold"] = sel.bh_threshold;
  json names = json::array();
  for (int idx : sel.selected) names.push_back(Y.labels[idx]);
  j["selected"] = names;
  j["selected_indices"] = sel.selected;
  write_json_file(fs::path(a.out) / "selection.json", j);
  write_alpha_csv(fs::path(a.out) / "alpha.csv", sel.alpha, Y.labels);
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_dir, int threads) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config: " + config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = harness::config_from_json(ss.str());
  if (threads > 0) cfg.threads = threads;
  auto report = cfg.mode == "ggm" ? harness::run_ggm_experiment(cfg)
                                  : harness::run_multitask_experiment(cfg);
  fs::create_directories(out_dir);
  harness::write_report_json((fs::path(out_dir) / "report.json").string(), report);
  harness::write_replicates_csv((fs::path(out_dir) / "replicates.csv").string(), report);
  return 0;
}

struct GraphgenArgs {
  std::string kind = "hub", out;
  int d = 100, groups = 10;
  double v = 0.4, u = 0.1, prob = 0.15;
  std::uint64_t seed = 0;
};

int run_graphgen(const GraphgenArgs& a) {
  graphgen::GraphParams params{a.v, a.u, a.prob};
  auto model = graphgen::generate_graph(graphgen::parse_kind(a.kind), a.d, a.groups, params,
                                        a.seed);
  fs::create_directories(a.out);
  {
    std::ofstream out(fs::path(a.out) / "graph.json");
    if (!out) throw InvalidInput("cannot write graph.json");
    out << graphgen::graph_to_json(model) << '\n';
  }
  io::save_matrix((fs::path(a.out) / "precision.csv").string(), model.precision);
  return 0;
}

struct CcbArgs {
  std::string variant = "counterexample", out;
  int d = 50;
  double delta = 0.01, rho = 0.9;
  long long samples = 1000000;
  std::uint64_t seed = 0;
  int threads = 0;
};

int run_ccb(const CcbArgs& a) {
  Matrix cov_u, cov_v;
  if (a.variant == "identical") {
    cov_u = harness::ar1_cov(a.d, 0.5);
    cov_v = cov_u;
  } else if (a.variant == "counterexample") {
    cov_u = harness::counterexample_cov(a.d, a.rho);
    cov_v = harness::counterexample_cov(a.d, 0.0);
  } else if (a.variant == "ar1-perturb") {
    cov_v = harness::ar1_cov(a.d, 0.5);
    cov_u = cov_v;
    cov_u(0, 1) += a.delta;
    cov_u(1, 0) += a.delta;
  } else {
    throw ConfigError("unknown ccb case: " + a.variant);
  }
  auto table = harness::verify_ccb(cov_u, cov_v, harness::default_t_grid(a.d), a.samples,
                                   a.seed, a.threads);
  fs::create_directories(a.out);
  harness::write_ccb_csv((fs::path(a.out) / "ccb.csv").string(), table);
  json j;
  j["tool_version"] = kVersion;
  j["rng"] = rng_metadata(a.seed);
  j["config"] = {{"case", a.variant}, {"d", a.d},       {"delta", a.delta},
                 {"rho", a.rho},      {"samples", a.samples}, {"seed", a.seed}};
  j["sup_ratio_dev"] = table.sup_dev;
  j["n_stable"] = table.n_stable;
  write_json_file(fs::path(a.out) / "ccb.json", j);
  return 0;
}

struct CacheArgs {
  std::string data, out, lambda = "cv";
  int boot = 4000, threads = 0;
  std::uint64_t seed = 0;
};

int run_ensemble_cache(const CacheArgs& a) {
  DataMatrix data = io::load_matrix(a.data);
  const int n = data.n(), d = data.d();
  Vector mean = data.values.colwise().mean();
  Matrix Xc = data.values.rowwise() - mean.transpose();
  CovMatrix S((Xc.transpose() * Xc) / static_cast<double>(n));

  SolverConfig scfg;
  scfg.seed = a.seed;
  Matrix theta;
  if (a.lambda == "cv") {
    theta = solvers::glasso_cv(data, solvers::default_lambda_grid(S), scfg).theta;
  } else {
    theta = solvers::glasso(S, std::stod(a.lambda), scfg).theta;
  }

  std::vector<Edge> universe;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) universe.emplace_back(j, k);
  auto scores = ggm::build_scores(theta, Xc, universe);
  auto ens = quantile::build_ensemble(scores, a.boot, a.seed, a.threads);
  quantile::save_ensemble(a.out, ens);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"StarTrek hub selection with FDR control"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (default: cores)");

  SelectArgs sa;
  auto* sel = app.add_subcommand("select", "hub-node selection on a data matrix");
  sel->add_option("--data", sa.data, "CSV data matrix (rows = observations)")->required();
  sel->add_option("--k-tau", sa.k_tau, "degree threshold")->required();
  sel->add_option("--q", sa.q, "nominal FDR level");
  sel->add_option("--boot", sa.boot, "bootstrap draw count");
  sel->add_option("--seed", sa.seed, "RNG seed");
  sel->add_option("--lambda", sa.lambda, "'cv' or a fixed glasso penalty");
  sel->add_flag("--standardize", sa.standardize, "center/scale columns");
  sel->add_flag("--log-transform", sa.log_transform, "log(1+x) transform");
  sel->add_option("--out", sa.out, "output directory")->required();

  MultitaskArgs ma;
  auto* mt = app.add_subcommand("select-multitask", "hub-response selection");
  mt->add_option("--data", ma.data, "predictor CSV")->required();
  mt->add_option("--response", ma.response, "response CSV")->required();
  mt->add_option("--k-tau", ma.k_tau, "degree threshold")->required();
  mt->add_option("--q", ma.q, "nominal FDR level");
  mt->add_option("--boot", ma.boot, "Gaussian quantile draw count");
  mt->add_option("--seed", ma.seed, "RNG seed");
  mt->add_option("--mu-a", ma.mu_a, "constant a in mu = a sqrt(log d2 / n)");
  mt->add_option("--lambda-c", ma.lambda_c, "constant c in the scaled-lasso penalty");
  mt->add_option("--out", ma.out, "output directory")->required();

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "replicated synthetic experiment");
  sim->add_option("--config", sim_config, "experiment config JSON")->required();
  sim->add_option("--out", sim_out, "output directory")->required();

  GraphgenArgs ga;
  auto* gg = app.add_subcommand("graphgen", "synthetic graph + precision matrix");
  gg->add_option("--kind", ga.kind, "hub|random|scalefree|knn");
  gg->add_option("--d", ga.d, "node count")->required();
  gg->add_option("--groups", ga.groups, "connected component count");
  gg->add_option("--seed", ga.seed, "RNG seed");
  gg->add_option("--v", ga.v, "off-diagonal precision value");
  gg->add_option("--u", ga.u, "diagonal margin");
  gg->add_option("--prob", ga.prob, "Erdos-Renyi edge probability");
  gg->add_option("--out", ga.out, "output directory")->required();

  CcbArgs ca;
  auto* cc = app.add_subcommand("ccb-verify", "comparison-bound Monte Carlo");
  cc->add_option("--case", ca.variant, "identical|counterexample|ar1-perturb");
  cc->add_option("--d", ca.d, "dimension");
  cc->add_option("--delta", ca.delta, "off-diagonal perturbation");
  cc->add_option("--rho", ca.rho, "counterexample correlation");
  cc->add_option("--samples", ca.samples, "Monte Carlo sample count");
  cc->add_option("--seed", ca.seed, "RNG seed");
  cc->add_option("--out", ca.out, "output directory")->required();

  CacheArgs ka;
  auto* ec = app.add_subcommand("ensemble-cache", "precompute a bootstrap ensemble");
  ec->add_option("--data", ka.data, "CSV data matrix")->required();
  ec->add_option("--lambda", ka.lambda, "'cv' or a fixed glasso penalty");
  ec->add_option("--boot", ka.boot, "bootstrap draw count");
  ec->add_option("--seed", ka.seed, "RNG seed");
  ec->add_option("--out", ka.out, "output ensemble file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  sa.threads = ma.threads = ca.threads = ka.threads = threads;
  try {
    if (*sel) return run_select(sa);
    if (*mt) return run_select_multitask(ma);
    if (*sim) return run_simulate(sim_config, sim_out, threads);
    if (*gg) return run_graphgen(ga);
    if (*cc) return run_ccb(ca);
    if (*ec) return run_ensemble_cache(ka);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
