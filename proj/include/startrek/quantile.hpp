#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "startrek/ggm.hpp"
#include "startrek/types.hpp"

namespace startrek::quantile {

// B draws of per-edge absolute multiplier sums; the max statistic over any
// sub-edge-set is a row-wise max over the corresponding columns.
struct BootstrapEnsemble {
  Matrix draws;  // B x |E|, nonnegative
  std::vector<Edge> edge_universe;
  std::uint64_t seed = 0;

  int B() const { return static_cast<int>(draws.rows()); }
  int n_edges() const { return static_cast<int>(draws.cols()); }

  std::vector<int> all_columns() const {
    std::vector<int> cols(n_edges());
    for (int i = 0; i < n_edges(); ++i) cols[i] = i;
    return cols;
  }
};

// Gaussian multiplier bootstrap: draw b uses the multiplier stream keyed by
// (seed, b), so results are independent of how draws are scheduled.
BootstrapEnsemble build_ensemble(const ggm::ScoreTensor& scores, int B, std::uint64_t seed,
                                 int threads = 0);

// Multiplier matrix Xi (B x n) with row b from stream (seed, b); shared by
// per-node ensembles so that one bootstrap process covers every edge set.
Matrix multiplier_matrix(int B, int n, std::uint64_t seed, int threads = 0);

// Ensemble from precomputed multipliers and a raw n x |E| score matrix.
BootstrapEnsemble ensemble_from_scores(const Matrix& xi, const Matrix& score_matrix,
                                       std::vector<Edge> edges, std::uint64_t seed);

// Empirical quantile c_hat(alpha, E): the ceil((1-alpha)B)-th order statistic
// of the per-draw maxima; c_hat(1, E) := 0 by convention.
double c_hat(const BootstrapEnsemble& ens, double alpha, const std::vector<int>& columns);

// p-value inverse: #{b : T_b >= t} / B.
double c_hat_inv(const BootstrapEnsemble& ens, double t, const std::vector<int>& columns);

// Per-draw maxima over a column subset (exposed for oracle checks).
Vector draw_maxima(const BootstrapEnsemble& ens, const std::vector<int>& columns);

// Ensemble of |Z| with Z ~ N(0, sigma^2 M Sigma M'); columns are coordinates,
// so c_hat / c_hat_inv apply unchanged.
BootstrapEnsemble gaussian_quantile_ensemble(const Matrix& M, const CovMatrix& sigma_hat,
                                             double sigma, int B, std::uint64_t seed,
                                             int threads = 0);

// Columnar binary cache: "STKB", version, B, |E|, edge list, row-major draws.
void save_ensemble(const std::string& path, const BootstrapEnsemble& ens);
BootstrapEnsemble load_ensemble(const std::string& path);

}  // namespace startrek::quantile
