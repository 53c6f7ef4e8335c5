#pragma once

#include <vector>

#include "startrek/types.hpp"

namespace startrek::solvers {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Coordinate descent for (1/2n)||y - X b||^2 + lambda ||b||_1.
Vector lasso(const Matrix& X, const Vector& y, double lambda, const SolverConfig& cfg);

// Same problem stated through sufficient statistics: gram = X'X/n, xty = X'y/n.
Vector lasso_gram(const Matrix& gram, const Vector& xty, double lambda, const SolverConfig& cfg,
                  Vector warm = Vector());

// Entrywise KKT (subgradient) residual of a lasso candidate solution.
double lasso_kkt_residual(const Matrix& X, const Vector& y, const Vector& beta, double lambda);

struct GlassoResult {
  Matrix theta;  // penalized precision estimate, symmetric PD
  Matrix w;      // working inverse maintained by the block algorithm
};

// Block coordinate descent (Friedman-style) for the l1-penalized Gaussian MLE
// with the off-diagonal-only penalty lambda ||Theta||_{1,off}.
GlassoResult glasso(const CovMatrix& S, double lambda, const SolverConfig& cfg);

// Warm-started path over a descending lambda grid on a fixed S.
std::vector<GlassoResult> glasso_path(const CovMatrix& S, const std::vector<double>& grid,
                                      const SolverConfig& cfg);

struct GlassoCvResult {
  Matrix theta;
  double lambda_star;
  std::vector<double> mean_scores;  // held-out log-likelihood per grid point
};

GlassoCvResult glasso_cv(const DataMatrix& X, const std::vector<double>& lambda_grid,
                         const SolverConfig& cfg);

// Deterministic fold assignment; exposed so the CV score can be recomputed
// independently in tests.
std::vector<int> cv_fold_assignment(int n, int folds, std::uint64_t seed);

// Conventional log-spaced grid from max off-diagonal |S_jk| down to 1% of it.
std::vector<double> default_lambda_grid(const CovMatrix& S, int points = 20);

struct ScaledLassoResult {
  Vector beta;
  double sigma_hat;
  bool degenerate_noise;
};

// Alternating minimization of (1/(2 sigma n))||y - X b||^2 + sigma/2 + lambda0 sigma ||b||_1.
ScaledLassoResult scaled_lasso(const Matrix& X, const Vector& y, double lambda0,
                               const SolverConfig& cfg);

struct MProgramResult {
  Matrix m;                        // rows are the per-coordinate solutions
  std::vector<bool> fallback_row;  // true where m_i = e_i / Sigma_ii was substituted
};

// Row-wise min m' Sigma m s.t. ||Sigma m - e_i||_inf <= mu, via coordinate
// descent on the equivalent l1-penalized form.
MProgramResult m_program(const CovMatrix& sigma_hat, double mu, const SolverConfig& cfg);

}  // namespace startrek::solvers
