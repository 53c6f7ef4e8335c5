#pragma once

#include <functional>
#include <vector>

#include "startrek/quantile.hpp"
#include "startrek/types.hpp"

namespace startrek::select {

struct HypothesisConfig {
  int k_tau = 3;
  double q = 0.1;
};

struct SelectionResult {
  Vector alpha;            // per-node p-values
  std::vector<int> selected;
  int j_max = 0;
  double bh_threshold = 0.0;
};

// Produces the bootstrap ensemble for node j's row edge universe; column c of
// the ensemble must correspond to the c-th entry of the node's row statistics.
using NodeEnsembleFn = std::function<quantile::BootstrapEnsemble(int)>;

// Combinatorial p-value for one node: max over s = 1..k_tau of the p-value of
// the s-th largest row statistic over its inclusive sub-edge-set E^(s).
// row_stats holds |theta_std| for the node's edges, in ensemble column order.
double node_alpha(const Vector& row_stats, const quantile::BootstrapEnsemble& ens, int k_tau,
                  int n);

SelectionResult bh_select(const Vector& alpha, double q);

// Skip-down single-node test: iteratively rejects edges above the shrinking
// edge set's quantile; accepts once k_tau edges have been rejected.
bool skipdown_test(const Vector& row_stats, const quantile::BootstrapEnsemble& ens, int k_tau,
                   double alpha, int n);

// Full filter over a standardized d x d matrix (diagonal excluded per row).
SelectionResult startrek_filter(const Matrix& theta_std, const NodeEnsembleFn& ens_provider,
                                const HypothesisConfig& cfg, int n, int threads = 0);

// Row statistics |theta_std(j, l)|, l != j, ascending l (ensemble column order).
Vector node_row_stats(const Matrix& theta_std, int j);

}  // namespace startrek::select
