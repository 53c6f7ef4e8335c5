#include "startrek/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "startrek/parallel.hpp"

namespace startrek::select {

Vector node_row_stats(const Matrix& theta_std, int j) {
  const Eigen::Index d = theta_std.rows();
  Vector stats(d - 1);
  for (Eigen::Index l = 0, c = 0; l < d; ++l)
    if (l != j) stats[c++] = std::abs(theta_std(j, l));
  return stats;
}

double node_alpha(const Vector& row_stats, const quantile::BootstrapEnsemble& ens, int k_tau,
                  int n) {
  const int m = static_cast<int>(row_stats.size());
  if (k_tau < 1 || k_tau > m) throw InvalidInput("node_alpha: k_tau out of range");
  if (ens.n_edges() != m) throw InvalidInput("node_alpha: ensemble/row size mismatch");

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return row_stats[a] > row_stats[b]; });

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  double alpha = 0.0;
  for (int s = 1; s <= k_tau; ++s) {
    const double val = row_stats[order[s - 1]];
    // E^(s) = {l : |stat_l| <= s-th largest}, inclusive of ties
    std::vector<int> cols;
    cols.reserve(m);
    for (int c = 0; c < m; ++c)
      if (row_stats[c] <= val) cols.push_back(c);
    alpha = std::max(alpha, quantile::c_hat_inv(ens, sqrt_n * val, cols));
  }
  return alpha;
}

SelectionResult bh_select(const Vector& alpha, double q) {
  const int d = static_cast<int>(alpha.size());
  for (int j = 0; j < d; ++j)
    if (!(alpha[j] >= 0.0 && alpha[j] <= 1.0))
      throw InvalidInput("bh_select: p-values must lie in [0,1]");

  std::vector<double> sorted(alpha.data(), alpha.data() + d);
  std::sort(sorted.begin(), sorted.end());
  int j_max = 0;
  for (int j = 1; j <= d; ++j)
    if (sorted[j - 1] <= q * j / d) j_max = j;

  SelectionResult res;
  res.alpha = alpha;
  res.j_max = j_max;
  if (j_max > 0) {
    res.bh_threshold = sorted[j_max - 1];
    for (int j = 0; j < d; ++j)
      if (alpha[j] <= res.bh_threshold) res.selected.push_back(j);
  }
  return res;
}

bool skipdown_test(const Vector& row_stats, const quantile::BootstrapEnsemble& ens, int k_tau,
                   double alpha, int n) {
  const int m = static_cast<int>(row_stats.size());
  if (k_tau < 1 || k_tau > m) throw InvalidInput("skipdown_test: k_tau out of range");
  if (ens.n_edges() != m) throw InvalidInput("skipdown_test: ensemble/row size mismatch");

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  std::vector<int> active(m);
  std::iota(active.begin(), active.end(), 0);
  int rejected = 0;
  while (!active.empty()) {
    const double c = quantile::c_hat(ens, alpha, active);
    std::vector<int> keep;
    keep.reserve(active.size());
    for (int e : active)
      if (!(sqrt_n * row_stats[e] > c)) keep.push_back(e);
    const int n_rejected = static_cast<int>(active.size() - keep.size());
    if (n_rejected == 0) return false;
    rejected += n_rejected;
    if (rejected >= k_tau) return true;
    active = std::move(keep);
  }
  return rejected >= k_tau;
}

SelectionResult startrek_filter(const Matrix& theta_std, const NodeEnsembleFn& ens_provider,
                                const HypothesisConfig& cfg, int n, int threads) {
  const int d = static_cast<int>(theta_std.rows());
  if (cfg.k_tau < 1 || cfg.k_tau > d - 1) throw InvalidInput("startrek: k_tau out of range");
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw InvalidInput("startrek: q must be in (0,1)");

  Vector alpha(d);
  parallel_for(d, threads, [&](std::size_t j) {
    quantile::BootstrapEnsemble ens = ens_provider(static_cast<int>(j));
    alpha[j] = node_alpha(node_row_stats(theta_std, static_cast<int>(j)), ens, cfg.k_tau, n);
  });
  return bh_select(alpha, cfg.q);
}

}  // namespace startrek::select
