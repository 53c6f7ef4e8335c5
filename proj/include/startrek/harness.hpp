#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "startrek/graphgen.hpp"
#include "startrek/multitask.hpp"
#include "startrek/select.hpp"
#include "startrek/types.hpp"

namespace startrek::harness {

struct ExperimentConfig {
  std::string mode = "ggm";  // "ggm" | "multitask"

  // shared
  int n = 400;
  int k_tau = 3;
  double q = 0.1;
  int B = 500;
  int replicates = 16;
  std::uint64_t seed = 0;
  int threads = 0;

  // ggm
  std::string graph_kind = "hub";
  int d = 100;
  int p_groups = 10;
  graphgen::GraphParams gparams;
  std::string lambda_policy = "cv";  // "cv" | "fixed"
  double lambda_fixed = 0.1;
  int cv_grid_points = 20;
  int cv_folds = 5;

  // multitask
  int d1 = 40;
  int d2 = 60;
  int hub_count = 10;
  int hub_degree = 0;        // 0 -> k_tau
  int null_degree_max = -1;  // -1 -> k_tau - 1
  double signal = 0.8;
  double noise_sigma = 1.0;
};

// Strict JSON schema: any unknown key is a ConfigError.
ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);

struct ReplicateRecord {
  int replicate = 0;
  double fdp = 0.0;
  double power = 0.0;
  int n_selected = 0;
  int d0 = 0;
  int n_hubs = 0;
  double runtime_ms = 0.0;
  bool failed = false;
  bool no_hubs = false;
  std::string error;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicateRecord> replicates;
  double mean_fdp = 0.0;
  double mean_power = 0.0;
  double se_fdp = 0.0;   // sample std of FDP / sqrt(#ok)
  double se_power = 0.0;
  double mean_q_d0_over_d = 0.0;  // oracle FDR reference level
  int failed_count = 0;
};

ExperimentReport run_ggm_experiment(const ExperimentConfig& cfg);
ExperimentReport run_multitask_experiment(const ExperimentConfig& cfg);

void write_report_json(const std::string& path, const ExperimentReport& report);
void write_replicates_csv(const std::string& path, const ExperimentReport& report);

// --- GGM pipeline pieces (shared with the CLI) ---

// X with iid rows ~ N(0, precision^{-1}), via the Cholesky factor of the
// precision matrix (no explicit inverse).
Matrix sample_ggm_data(const Matrix& precision, int n, std::uint64_t seed);

// Full StarTrek run on data: estimate (cv or fixed lambda), debias, per-node
// bootstrap ensembles off one shared multiplier matrix, filter.
struct GgmSelectOptions {
  int k_tau = 3;
  double q = 0.1;
  int B = 4000;
  std::uint64_t seed = 0;
  std::string lambda_policy = "cv";
  double lambda_fixed = 0.1;
  int cv_grid_points = 20;
  int cv_folds = 5;
  int threads = 0;
};

struct GgmSelectOutput {
  select::SelectionResult result;
  Matrix theta_std;
  double lambda_used = 0.0;
};

GgmSelectOutput ggm_select(const Matrix& X, const GgmSelectOptions& opt);

// StarTrek on a known estimate (no fitting); used by calibration studies.
select::SelectionResult startrek_on_estimate(const Matrix& theta_hat, const Matrix& X,
                                             const select::HypothesisConfig& cfg, int B,
                                             std::uint64_t seed, int threads = 0);

// --- Cramer-type comparison bound studies ---

struct CcbRow {
  double t = 0.0;
  double p_num = 0.0;  // P(||U||_inf > t)
  double p_den = 0.0;  // P(||V||_inf > t)
  double ratio_dev = 0.0;
  double se = 0.0;
  bool stable = true;
};

struct CcbTable {
  std::vector<CcbRow> rows;
  double sup_dev = 0.0;  // over stable rows
  int n_stable = 0;
};

// Monte-Carlo tails of two Gaussian maxima with common random numbers.
CcbTable verify_ccb(const Matrix& cov_u, const Matrix& cov_v, const std::vector<double>& t_grid,
                    long long mc_samples, std::uint64_t seed, int threads = 0);

std::vector<double> default_t_grid(int d, int points = 40, double c0 = 1.5);

// (X1, X2, Z, ..., Z) with corr(X1, X2) = rho and a shared tail coordinate.
Matrix counterexample_cov(int d, double rho);
Matrix ar1_cov(int d, double rho);

void write_ccb_csv(const std::string& path, const CcbTable& table);

}  // namespace startrek::harness
