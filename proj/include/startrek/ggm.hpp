#pragma once

#include <vector>

#include "startrek/types.hpp"

namespace startrek::ggm {

struct DebiasedMatrix {
  Matrix theta_raw;  // input estimate
  Matrix theta_d;    // one-step corrected, symmetrized
  Matrix theta_std;  // theta_d standardized to unit diagonal
  int n = 0;
};

// One-step correction Theta_d(j,k) = Theta(j,k) - Theta_j'(S Theta_k - e_k) / (Theta_j' S_j),
// symmetrized, then standardized by its own diagonal.
DebiasedMatrix onestep_debias(const Matrix& theta_hat, const CovMatrix& sigma_hat, int n = 0);

struct ScoreTensor {
  Matrix scores;  // n x |E|; column e holds the per-observation scores of edge e
  std::vector<Edge> edge_universe;
};

// Per-observation bootstrap scores
//   s_i(j,k) = Theta_j'(X_i X_i' Theta_k - e_k) / sqrt(Theta_jj Theta_kk),
// with the raw (not debiased) diagonals in the denominator.
ScoreTensor build_scores(const Matrix& theta_hat, const Matrix& X,
                         const std::vector<Edge>& edge_universe);

// Score matrix for the single-node edge universe {(j,l): l != j}, columns in
// ascending l order. Shares its algebra with build_scores; U must be X * theta_hat.
Matrix node_score_matrix(const Matrix& theta_hat, const Matrix& U, int j);

}  // namespace startrek::ggm
