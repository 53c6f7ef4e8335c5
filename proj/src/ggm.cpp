#include "startrek/ggm.hpp"

#include <cmath>
#include <set>

namespace startrek::ggm {

DebiasedMatrix onestep_debias(const Matrix& theta_hat, const CovMatrix& sigma_hat, int n) {
  const Eigen::Index d = theta_hat.rows();
  if (theta_hat.cols() != d || sigma_hat.values.rows() != d)
    throw InvalidInput("onestep_debias: shape mismatch");
  if (theta_hat.diagonal().minCoeff() <= 0.0)
    throw InvalidInput("onestep_debias: theta_hat diagonal must be strictly positive");

  const Matrix& S = sigma_hat.values;
  Matrix resid = S * theta_hat - Matrix::Identity(d, d);
  Matrix corr = theta_hat.transpose() * resid;  // corr(j,k) = Theta_j'(S Theta_k - e_k)
  Vector denom = (theta_hat.transpose() * S).diagonal();
  for (Eigen::Index j = 0; j < d; ++j)
    if (std::abs(denom[j]) < 1e-10)
      throw DegenerateDenominator("onestep_debias: Theta_j' S_j near zero", static_cast<int>(j));

  Matrix theta_d = theta_hat - denom.cwiseInverse().asDiagonal() * corr;
  theta_d = ((theta_d + theta_d.transpose()) / 2.0).eval();

  Vector diag = theta_d.diagonal();
  for (Eigen::Index j = 0; j < d; ++j)
    if (diag[j] <= 0.0)
      throw DegenerateDenominator("onestep_debias: nonpositive debiased diagonal",
                                  static_cast<int>(j));
  Vector inv_sqrt = diag.cwiseSqrt().cwiseInverse();
  Matrix theta_std = inv_sqrt.asDiagonal() * theta_d * inv_sqrt.asDiagonal();
  theta_std.diagonal().setOnes();
  theta_std = ((theta_std + theta_std.transpose()) / 2.0).eval();

  return {theta_hat, std::move(theta_d), std::move(theta_std), n};
}

ScoreTensor build_scores(const Matrix& theta_hat, const Matrix& X,
                         const std::vector<Edge>& edge_universe) {
  const Eigen::Index d = theta_hat.rows();
  const Eigen::Index n = X.rows();
  if (X.cols() != d) throw InvalidInput("build_scores: X/theta shape mismatch");
  std::set<Edge> seen;
  for (const Edge& e : edge_universe) {
    if (e.first < 0 || e.first >= d || e.second < 0 || e.second >= d)
      throw InvalidInput("build_scores: edge index out of range");
    if (!seen.insert(e).second) throw InvalidInput("build_scores: duplicate edge");
  }
  for (Eigen::Index j = 0; j < d; ++j)
    if (theta_hat(j, j) <= 0.0)
      throw DegenerateDenominator("build_scores: nonpositive Theta_jj", static_cast<int>(j));

  Matrix U = X * theta_hat;  // U(i,j) = X_i' Theta_j
  ScoreTensor out;
  out.edge_universe = edge_universe;
  out.scores.resize(n, static_cast<Eigen::Index>(edge_universe.size()));
  for (std::size_t e = 0; e < edge_universe.size(); ++e) {
    const auto [j, k] = edge_universe[e];
    const double denom = std::sqrt(theta_hat(j, j) * theta_hat(k, k));
    // Theta_j'(X_i X_i' Theta_k - e_k) = U_ij U_ik - Theta(k,j)
    out.scores.col(e) =
        (U.col(j).array() * U.col(k).array() - theta_hat(k, j)).matrix() / denom;
  }
  return out;
}

Matrix node_score_matrix(const Matrix& theta_hat, const Matrix& U, int j) {
  const Eigen::Index d = theta_hat.rows();
  const Eigen::Index n = U.rows();
  Matrix S(n, d - 1);
  const double tjj = theta_hat(j, j);
  for (Eigen::Index l = 0, c = 0; l < d; ++l) {
    if (l == j) continue;
    const double denom = std::sqrt(tjj * theta_hat(l, l));
    S.col(c++) = (U.col(j).array() * U.col(l).array() - theta_hat(l, j)).matrix() / denom;
  }
  return S;
}

}  // namespace startrek::ggm
