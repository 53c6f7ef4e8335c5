#pragma once

#include <vector>

#include "startrek/select.hpp"
#include "startrek/solvers.hpp"
#include "startrek/types.hpp"

namespace startrek::multitask {

struct MultitaskFit {
  Matrix theta_hat;  // d1 x d2, per-response scaled-lasso estimates
  Matrix theta_d;    // d1 x d2, debiased
  Vector sigma;      // per-response noise estimates
  Matrix m;          // decorrelating matrix, d2 x d2
  CovMatrix sigma_hat;
  int n = 0;
  std::vector<bool> m_fallback_row;
  std::vector<bool> degenerate_noise;
};

struct MultitaskConfig {
  double lambda_c = 1.1;  // lambda = sigma * sqrt(c^2 log d2 / n)
  double mu_a = 1.0;      // mu = a * sqrt(log d2 / n)
  SolverConfig solver;
  int threads = 0;
};

// Per-response scaled Lasso + debiasing with the shared decorrelating matrix.
MultitaskFit fit_multitask(const Matrix& X, const Matrix& Y, const MultitaskConfig& cfg = {});

// Gaussian-quantile StarTrek over responses; row universes span all d2
// predictors (no diagonal exclusion in the bipartite graph).
select::SelectionResult select_hub_responses(const MultitaskFit& fit,
                                             const select::HypothesisConfig& cfg, int B,
                                             std::uint64_t seed, int threads = 0);

}  // namespace startrek::multitask
