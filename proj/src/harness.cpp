#include "startrek/harness.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "startrek/ggm.hpp"
#include "startrek/parallel.hpp"
#include "startrek/rng.hpp"
#include "startrek/solvers.hpp"

namespace startrek::harness {

using nlohmann::json;

namespace {

const std::set<std::string> kConfigKeys = {
    "spec_version",  "mode",         "n",           "k_tau",         "q",
    "B",             "replicates",   "seed",        "threads",       "graph_kind",
    "d",             "p_groups",     "v",           "u",             "connect_prob",
    "lambda_policy", "lambda_fixed", "cv_grid_points", "cv_folds",   "d1",
    "d2",            "hub_count",    "hub_degree",  "null_degree_max", "signal",
    "noise_sigma"};

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto& [key, _] : j.items())
    if (!kConfigKeys.count(key)) throw ConfigError("unknown config field: " + key);
  if (!j.contains("spec_version") || j["spec_version"] != 1)
    throw ConfigError("config requires \"spec_version\": 1");

  ExperimentConfig cfg;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) out = j[key].get<std::decay_t<decltype(out)>>();
  };
  get("mode", cfg.mode);
  get("n", cfg.n);
  get("k_tau", cfg.k_tau);
  get("q", cfg.q);
  get("B", cfg.B);
  get("replicates", cfg.replicates);
  get("seed", cfg.seed);
  get("threads", cfg.threads);
  get("graph_kind", cfg.graph_kind);
  get("d", cfg.d);
  get("p_groups", cfg.p_groups);
  get("v", cfg.gparams.v);
  get("u", cfg.gparams.u);
  get("connect_prob", cfg.gparams.connect_prob);
  get("lambda_policy", cfg.lambda_policy);
  get("lambda_fixed", cfg.lambda_fixed);
  get("cv_grid_points", cfg.cv_grid_points);
  get("cv_folds", cfg.cv_folds);
  get("d1", cfg.d1);
  get("d2", cfg.d2);
  get("hub_count", cfg.hub_count);
  get("hub_degree", cfg.hub_degree);
  get("null_degree_max", cfg.null_degree_max);
  get("signal", cfg.signal);
  get("noise_sigma", cfg.noise_sigma);

  if (cfg.mode != "ggm" && cfg.mode != "multitask")
    throw ConfigError("mode must be \"ggm\" or \"multitask\"");
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw ConfigError("q must be in (0,1)");
  if (cfg.k_tau < 1) throw ConfigError("k_tau must be >= 1");
  if (cfg.B < 1) throw ConfigError("B must be >= 1");
  if (cfg.lambda_policy != "cv" && cfg.lambda_policy != "fixed")
    throw ConfigError("lambda_policy must be \"cv\" or \"fixed\"");
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["spec_version"] = 1;
  j["mode"] = cfg.mode;
  j["n"] = cfg.n;
  j["k_tau"] = cfg.k_tau;
  j["q"] = cfg.q;
  j["B"] = cfg.B;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  // the thread cap never affects results, so it is not part of the echo
  if (cfg.mode == "ggm") {
    j["graph_kind"] = cfg.graph_kind;
    j["d"] = cfg.d;
    j["p_groups"] = cfg.p_groups;
    j["v"] = cfg.gparams.v;
    j["u"] = cfg.gparams.u;
    j["connect_prob"] = cfg.gparams.connect_prob;
    j["lambda_policy"] = cfg.lambda_policy;
    j["lambda_fixed"] = cfg.lambda_fixed;
    j["cv_grid_points"] = cfg.cv_grid_points;
    j["cv_folds"] = cfg.cv_folds;
  } else {
    j["d1"] = cfg.d1;
    j["d2"] = cfg.d2;
    j["hub_count"] = cfg.hub_count;
    j["hub_degree"] = cfg.hub_degree;
    j["null_degree_max"] = cfg.null_degree_max;
    j["signal"] = cfg.signal;
    j["noise_sigma"] = cfg.noise_sigma;
  }
  return j.dump(2);
}

Matrix sample_ggm_data(const Matrix& precision, int n, std::uint64_t seed) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw InvalidInput("sample_ggm_data: precision not PD");
  const Eigen::Index d = precision.rows();
  Matrix G(n, d);
  NormalStream stream(seed, 0x5a3fULL);
  stream.fill(G);
  // X_i = L^{-T} g_i, so cov(X_i) = (L L^T)^{-1} = precision^{-1}
  Matrix Xt = llt.matrixU().solve(G.transpose());
  return Xt.transpose();
}

select::SelectionResult startrek_on_estimate(const Matrix& theta_hat, const Matrix& X,
                                             const select::HypothesisConfig& cfg, int B,
                                             std::uint64_t seed, int threads) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  Vector mean = X.colwise().mean();
  Matrix Xc = X.rowwise() - mean.transpose();
  CovMatrix S((Xc.transpose() * Xc) / static_cast<double>(n));
  auto deb = ggm::onestep_debias(theta_hat, S, n);

  Matrix xi = quantile::multiplier_matrix(B, n, mix_seed(seed, 0xb007), threads);
  Matrix U = Xc * theta_hat;
  select::NodeEnsembleFn provider = [&](int j) {
    Matrix scores = ggm::node_score_matrix(theta_hat, U, j);
    std::vector<Edge> edges;
    edges.reserve(d - 1);
    for (int l = 0; l < d; ++l)
      if (l != j) edges.emplace_back(j, l);
    return quantile::ensemble_from_scores(xi, scores, std::move(edges), seed);
  };
  return select::startrek_filter(deb.theta_std, provider, cfg, n, threads);
}

GgmSelectOutput ggm_select(const Matrix& X, const GgmSelectOptions& opt) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  Vector mean = X.colwise().mean();
  Matrix Xc = X.rowwise() - mean.transpose();
  CovMatrix S((Xc.transpose() * Xc) / static_cast<double>(n));

  SolverConfig scfg;
  scfg.cv_folds = opt.cv_folds;
  scfg.seed = opt.seed;

  Matrix theta_hat;
  double lambda_used;
  if (opt.lambda_policy == "cv") {
    DataMatrix dm;
    dm.values = X;
    auto cv = solvers::glasso_cv(dm, solvers::default_lambda_grid(S, opt.cv_grid_points), scfg);
    theta_hat = std::move(cv.theta);
    lambda_used = cv.lambda_star;
  } else {
    theta_hat = solvers::glasso(S, opt.lambda_fixed, scfg).theta;
    lambda_used = opt.lambda_fixed;
  }

  auto deb = ggm::onestep_debias(theta_hat, S, n);
  Matrix xi = quantile::multiplier_matrix(opt.B, n, mix_seed(opt.seed, 0xb007), opt.threads);
  Matrix U = Xc * theta_hat;
  select::NodeEnsembleFn provider = [&](int j) {
    Matrix scores = ggm::node_score_matrix(theta_hat, U, j);
    std::vector<Edge> edges;
    edges.reserve(d - 1);
    for (int l = 0; l < d; ++l)
      if (l != j) edges.emplace_back(j, l);
    return quantile::ensemble_from_scores(xi, scores, std::move(edges), opt.seed);
  };
  select::HypothesisConfig hcfg{opt.k_tau, opt.q};
  GgmSelectOutput out;
  out.result = select::startrek_filter(deb.theta_std, provider, hcfg, n, opt.threads);
  out.theta_std = std::move(deb.theta_std);
  out.lambda_used = lambda_used;
  return out;
}

namespace {

void score_selection(const std::vector<int>& selected, const std::vector<int>& h0,
                     const std::vector<int>& hubs, ReplicateRecord& rec) {
  std::set<int> null_set(h0.begin(), h0.end());
  int false_sel = 0, true_sel = 0;
  for (int j : selected) (null_set.count(j) ? false_sel : true_sel)++;
  rec.n_selected = static_cast<int>(selected.size());
  rec.fdp = static_cast<double>(false_sel) / std::max<std::size_t>(1, selected.size());
  rec.d0 = static_cast<int>(h0.size());
  rec.n_hubs = static_cast<int>(hubs.size());
  if (hubs.empty()) {
    rec.power = 0.0;
    rec.no_hubs = true;
  } else {
    rec.power = static_cast<double>(true_sel) / hubs.size();
  }
}

void finalize_report(ExperimentReport& report) {
  double sum_fdp = 0, sum_pow = 0, sum_ref = 0;
  int ok = 0;
  for (const auto& r : report.replicates) {
    if (r.failed) {
      ++report.failed_count;
      continue;
    }
    sum_fdp += r.fdp;
    sum_pow += r.power;
    int d_total = r.d0 + r.n_hubs;
    sum_ref += report.config.q * r.d0 / std::max(1, d_total);
    ++ok;
  }
  if (ok == 0) return;
  report.mean_fdp = sum_fdp / ok;
  report.mean_power = sum_pow / ok;
  report.mean_q_d0_over_d = sum_ref / ok;
  double var_fdp = 0, var_pow = 0;
  for (const auto& r : report.replicates) {
    if (r.failed) continue;
    var_fdp += (r.fdp - report.mean_fdp) * (r.fdp - report.mean_fdp);
    var_pow += (r.power - report.mean_power) * (r.power - report.mean_power);
  }
  if (ok > 1) {
    report.se_fdp = std::sqrt(var_fdp / (ok - 1) / ok);
    report.se_power = std::sqrt(var_pow / (ok - 1) / ok);
  }
}

}  // namespace

ExperimentReport run_ggm_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  report.replicates.resize(cfg.replicates);
  const auto kind = graphgen::parse_kind(cfg.graph_kind);

  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    ReplicateRecord& rec = report.replicates[r];
    rec.replicate = static_cast<int>(r);
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::uint64_t rep_seed = mix_seed(cfg.seed, r);
      auto model = graphgen::generate_graph(kind, cfg.d, cfg.p_groups, cfg.gparams, rep_seed);
      auto truth = graphgen::ground_truth(model, cfg.k_tau);
      Matrix X = sample_ggm_data(model.precision, cfg.n, mix_seed(rep_seed, 1));

      GgmSelectOptions opt;
      opt.k_tau = cfg.k_tau;
      opt.q = cfg.q;
      opt.B = cfg.B;
      opt.seed = mix_seed(rep_seed, 2);
      opt.lambda_policy = cfg.lambda_policy;
      opt.lambda_fixed = cfg.lambda_fixed;
      opt.cv_grid_points = cfg.cv_grid_points;
      opt.cv_folds = cfg.cv_folds;
      opt.threads = 1;  // replicates already run in parallel
      auto out = ggm_select(X, opt);
      score_selection(out.result.selected, truth.h0, truth.hubs, rec);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  });
  finalize_report(report);
  return report;
}

ExperimentReport run_multitask_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  report.replicates.resize(cfg.replicates);
  const int hub_degree = cfg.hub_degree > 0 ? cfg.hub_degree : cfg.k_tau;
  const int null_max = cfg.null_degree_max >= 0 ? cfg.null_degree_max : cfg.k_tau - 1;
  if (hub_degree > cfg.d2 || null_max >= cfg.k_tau)
    throw ConfigError("multitask degrees inconsistent with k_tau/d2");

  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    ReplicateRecord& rec = report.replicates[r];
    rec.replicate = static_cast<int>(r);
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::uint64_t rep_seed = mix_seed(cfg.seed, r);
      std::mt19937_64 eng(mix_seed(rep_seed, 3));

      // plant the parameter matrix
      Matrix theta = Matrix::Zero(cfg.d1, cfg.d2);
      std::vector<int> rows(cfg.d1);
      std::iota(rows.begin(), rows.end(), 0);
      std::shuffle(rows.begin(), rows.end(), eng);
      std::vector<int> h0, hubs;
      std::vector<int> cols(cfg.d2);
      std::iota(cols.begin(), cols.end(), 0);
      for (int i = 0; i < cfg.d1; ++i) {
        const int row = rows[i];
        const bool is_hub = i < cfg.hub_count;
        int deg = is_hub ? hub_degree
                         : std::uniform_int_distribution<int>(0, null_max)(eng);
        std::shuffle(cols.begin(), cols.end(), eng);
        for (int c = 0; c < deg; ++c)
          theta(row, cols[c]) =
              (std::uniform_int_distribution<int>(0, 1)(eng) ? 1.0 : -1.0) * cfg.signal;
        (is_hub ? hubs : h0).push_back(row);
      }

      NormalStream xs(rep_seed, 4);
      Matrix X(cfg.n, cfg.d2);
      xs.fill(X);
      NormalStream es(rep_seed, 5);
      Matrix E(cfg.n, cfg.d1);
      es.fill(E);
      Matrix Y = X * theta.transpose() + cfg.noise_sigma * E;

      multitask::MultitaskConfig mcfg;
      mcfg.threads = 1;
      auto fit = multitask::fit_multitask(X, Y, mcfg);
      select::HypothesisConfig hcfg{cfg.k_tau, cfg.q};
      auto sel = multitask::select_hub_responses(fit, hcfg, cfg.B, mix_seed(rep_seed, 6), 1);
      score_selection(sel.selected, h0, hubs, rec);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  });
  finalize_report(report);
  return report;
}

void write_report_json(const std::string& path, const ExperimentReport& report) {
  json j;
  j["config"] = json::parse(config_to_json(report.config));
  j["mean_fdp"] = report.mean_fdp;
  j["mean_power"] = report.mean_power;
  j["se_fdp"] = report.se_fdp;
  j["se_power"] = report.se_power;
  j["mean_q_d0_over_d"] = report.mean_q_d0_over_d;
  j["failed_count"] = report.failed_count;
  j["rng"] = {{"generator", rng_generator_name()}, {"seed", report.config.seed}};
  json reps = json::array();
  for (const auto& r : report.replicates) {
    json jr = {{"replicate", r.replicate}, {"fdp", r.fdp},
               {"power", r.power},         {"n_selected", r.n_selected},
               {"d0", r.d0},               {"n_hubs", r.n_hubs},
               {"runtime_ms", r.runtime_ms}, {"failed", r.failed},
               {"no_hubs", r.no_hubs}};
    if (r.failed) jr["error"] = r.error;
    reps.push_back(jr);
  }
  j["replicates"] = reps;
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write report: " + path);
  out << j.dump(2) << '\n';
}

void write_replicates_csv(const std::string& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write csv: " + path);
  out << "replicate,fdp,power,n_selected,d0,runtime_ms\n";
  char buf[256];
  for (const auto& r : report.replicates) {
    if (r.failed) continue;
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d,%d,%.17g\n", r.replicate, r.fdp, r.power,
                  r.n_selected, r.d0, r.runtime_ms);
    out << buf;
  }
}

std::vector<double> default_t_grid(int d, int points, double c0) {
  std::vector<double> grid(points);
  const double tmax = c0 * std::sqrt(std::log(static_cast<double>(d)));
  for (int i = 0; i < points; ++i) grid[i] = tmax * i / (points - 1);
  return grid;
}

Matrix counterexample_cov(int d, double rho) {
  if (d < 3) throw InvalidInput("counterexample_cov: need d >= 3");
  Matrix cov = Matrix::Zero(d, d);
  cov(0, 0) = cov(1, 1) = 1.0;
  cov(0, 1) = cov(1, 0) = rho;
  for (int i = 2; i < d; ++i)
    for (int j = 2; j < d; ++j) cov(i, j) = 1.0;  // identical shared coordinate
  return cov;
}

Matrix ar1_cov(int d, double rho) {
  Matrix cov(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cov(i, j) = std::pow(rho, std::abs(i - j));
  return cov;
}

namespace {

Matrix psd_factor(const Matrix& cov) {
  Matrix sym = (cov + cov.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw InvalidCovariance("ccb: eigendecomposition failed");
  Vector evals = es.eigenvalues();
  if (evals.minCoeff() < -1e-6)
    throw InvalidCovariance("ccb: covariance has eigenvalue below -1e-6");
  for (Eigen::Index i = 0; i < evals.size(); ++i) evals[i] = std::max(evals[i], 0.0);
  return es.eigenvectors() * evals.cwiseSqrt().asDiagonal();
}

}  // namespace

CcbTable verify_ccb(const Matrix& cov_u, const Matrix& cov_v, const std::vector<double>& t_grid,
                    long long mc_samples, std::uint64_t seed, int threads) {
  if (cov_u.rows() != cov_v.rows()) throw InvalidInput("verify_ccb: dimension mismatch");
  const Eigen::Index d = cov_u.rows();
  Matrix Lu = psd_factor(cov_u);
  Matrix Lv = psd_factor(cov_v);

  const long long chunk = 8192;
  const long long n_chunks = (mc_samples + chunk - 1) / chunk;
  const std::size_t T = t_grid.size();

  std::vector<std::vector<long long>> cu(n_chunks), cv(n_chunks);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    const long long m = std::min(chunk, mc_samples - static_cast<long long>(c) * chunk);
    NormalStream stream(seed, 0xccb000ULL + c);
    Matrix G(d, m);
    stream.fill(G);
    // common random numbers: both maxima share G
    Eigen::RowVectorXd umax = (Lu * G).cwiseAbs().colwise().maxCoeff();
    Eigen::RowVectorXd vmax = (Lv * G).cwiseAbs().colwise().maxCoeff();
    cu[c].assign(T, 0);
    cv[c].assign(T, 0);
    for (long long i = 0; i < m; ++i)
      for (std::size_t t = 0; t < T; ++t) {
        if (umax[i] > t_grid[t]) ++cu[c][t];
        if (vmax[i] > t_grid[t]) ++cv[c][t];
      }
  });

  CcbTable table;
  table.rows.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    long long nu = 0, nv = 0;
    for (long long c = 0; c < n_chunks; ++c) {
      nu += cu[c][t];
      nv += cv[c][t];
    }
    CcbRow& row = table.rows[t];
    row.t = t_grid[t];
    const double N = static_cast<double>(mc_samples);
    row.p_num = nu / N;
    row.p_den = nv / N;
    row.stable = nv >= 10;
    if (row.stable) {
      const double ratio = row.p_num / row.p_den;
      row.ratio_dev = std::abs(ratio - 1.0);
      const double se_num = std::sqrt(row.p_num * (1.0 - row.p_num) / N);
      const double se_den = std::sqrt(row.p_den * (1.0 - row.p_den) / N);
      row.se = se_num / row.p_den + row.p_num / (row.p_den * row.p_den) * se_den;
      if (row.ratio_dev > table.sup_dev) table.sup_dev = row.ratio_dev;
      ++table.n_stable;
    }
  }
  return table;
}

void write_ccb_csv(const std::string& path, const CcbTable& table) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write csv: " + path);
  out << "t,p_num,p_den,ratio_dev,se,stable\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.t, r.p_num, r.p_den,
                  r.ratio_dev, r.se, r.stable ? 1 : 0);
    out << buf;
  }
}

}  // namespace startrek::harness
