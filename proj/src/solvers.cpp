#include "startrek/solvers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "startrek/rng.hpp"

namespace startrek::solvers {

namespace {

// One CD pass over all coordinates; returns the max coordinate change.
// grad holds xty - G*beta and is kept in sync.
double cd_sweep(const Matrix& G, Vector& beta, Vector& grad, double lambda) {
  double max_change = 0.0;
  const Eigen::Index p = beta.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double gjj = G(j, j);
    if (gjj <= 0.0) {
      if (beta[j] != 0.0) {
        grad += beta[j] * G.col(j);
        max_change = std::max(max_change, std::abs(beta[j]));
        beta[j] = 0.0;
      }
      continue;
    }
    const double z = grad[j] + gjj * beta[j];
    const double bj = soft_threshold(z, lambda) / gjj;
    const double delta = bj - beta[j];
    if (delta != 0.0) {
      grad -= delta * G.col(j);
      beta[j] = bj;
      max_change = std::max(max_change, std::abs(delta));
    }
  }
  return max_change;
}

}  // namespace

Vector lasso_gram(const Matrix& gram, const Vector& xty, double lambda, const SolverConfig& cfg,
                  Vector warm) {
  const Eigen::Index p = gram.rows();
  Vector beta = (warm.size() == p) ? std::move(warm) : Vector::Zero(p);
  Vector grad = xty - gram * beta;
  double change = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    change = cd_sweep(gram, beta, grad, lambda);
    if (change < cfg.tol) return beta;
  }
  throw ConvergeFailure("lasso did not converge", cfg.max_iter, change);
}

Vector lasso(const Matrix& X, const Vector& y, double lambda, const SolverConfig& cfg) {
  if (X.rows() < 1 || X.cols() < 1) throw InvalidInput("lasso: empty design");
  if (X.rows() != y.size()) throw InvalidInput("lasso: X/y shape mismatch");
  if (!X.allFinite() || !y.allFinite()) throw InvalidInput("lasso: non-finite input");
  if (lambda < 0.0) throw InvalidInput("lasso: negative lambda");
  const double n = static_cast<double>(X.rows());
  Matrix gram = (X.transpose() * X) / n;
  Vector xty = (X.transpose() * y) / n;
  return lasso_gram(gram, xty, lambda, cfg);
}

double lasso_kkt_residual(const Matrix& X, const Vector& y, const Vector& beta, double lambda) {
  const double n = static_cast<double>(X.rows());
  Vector g = X.transpose() * (X * beta - y) / n;  // gradient of the smooth part
  double res = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double r;
    if (beta[j] > 0.0)
      r = std::abs(g[j] + lambda);
    else if (beta[j] < 0.0)
      r = std::abs(g[j] - lambda);
    else
      r = std::max(0.0, std::abs(g[j]) - lambda);
    res = std::max(res, r);
  }
  return res;
}

namespace {

// Solves the column subproblem min (1/2) b' W11 b - s12' b + lambda |b|_1.
void glasso_column(const Matrix& W, const Matrix& S, Eigen::Index j, double lambda,
                   const SolverConfig& cfg, Vector& beta) {
  const Eigen::Index p = W.rows();
  Matrix W11(p - 1, p - 1);
  Vector s12(p - 1);
  for (Eigen::Index a = 0, ia = 0; a < p; ++a) {
    if (a == j) continue;
    s12[ia] = S(a, j);
    for (Eigen::Index b = 0, ib = 0; b < p; ++b) {
      if (b == j) continue;
      W11(ia, ib) = W(a, b);
      ++ib;
    }
    ++ia;
  }
  Vector grad = s12 - W11 * beta;
  double change = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    change = cd_sweep(W11, beta, grad, lambda);
    if (change < cfg.tol) return;
  }
  throw ConvergeFailure("glasso column subproblem did not converge", cfg.max_iter, change);
}

}  // namespace

std::vector<GlassoResult> glasso_path(const CovMatrix& S, const std::vector<double>& grid,
                                      const SolverConfig& cfg) {
  const Eigen::Index p = S.values.rows();
  const Matrix& Sm = S.values;

  Matrix W = Sm;
  Matrix B = Matrix::Zero(p, p);  // column j holds beta for column j (entry j unused)
  std::vector<GlassoResult> out;
  out.reserve(grid.size());

  double offscale = 0.0;
  if (p > 1) {
    offscale = (Sm.cwiseAbs().sum() - Sm.diagonal().cwiseAbs().sum()) /
               static_cast<double>(p * (p - 1));
  }
  const double outer_tol = cfg.tol * std::max(offscale, 1e-3 * Sm.diagonal().mean());

  for (double lambda : grid) {
    if (lambda < 0.0) throw InvalidInput("glasso: negative lambda");
    double change = 0.0;
    int outer = 0;
    for (; outer < cfg.max_iter; ++outer) {
      change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        Vector beta(p - 1);
        for (Eigen::Index a = 0, ia = 0; a < p; ++a)
          if (a != j) beta[ia++] = B(a, j);
        glasso_column(W, Sm, j, lambda, cfg, beta);
        for (Eigen::Index a = 0, ia = 0; a < p; ++a)
          if (a != j) B(a, j) = beta[ia++];
        // w12 = W11 * beta
        Vector w12 = Vector::Zero(p);
        for (Eigen::Index b = 0, ib = 0; b < p; ++b) {
          if (b == j) continue;
          double bb = beta[ib++];
          if (bb != 0.0) w12 += bb * W.col(b);
        }
        w12[j] = 0.0;  // W11 excludes row j
        for (Eigen::Index a = 0; a < p; ++a) {
          if (a == j) continue;
          change = std::max(change, std::abs(W(a, j) - w12[a]));
          W(a, j) = w12[a];
          W(j, a) = w12[a];
        }
      }
      if (change < outer_tol || p == 1) break;
    }
    if (outer >= cfg.max_iter)
      throw ConvergeFailure("glasso did not converge", cfg.max_iter, change);

    // recover Theta from (W, B)
    Matrix theta(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      double wb = 0.0;
      for (Eigen::Index a = 0; a < p; ++a)
        if (a != j) wb += W(a, j) * B(a, j);
      const double denom = W(j, j) - wb;
      if (denom <= 0.0)
        throw ConvergeFailure("glasso lost positive definiteness", outer, denom);
      theta(j, j) = 1.0 / denom;
      for (Eigen::Index a = 0; a < p; ++a)
        if (a != j) theta(a, j) = -B(a, j) * theta(j, j);
    }
    theta = ((theta + theta.transpose()) / 2.0).eval();
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success)
      throw ConvergeFailure("glasso estimate not PD", outer, 0.0);
    out.push_back({std::move(theta), W});
  }
  return out;
}

GlassoResult glasso(const CovMatrix& S, double lambda, const SolverConfig& cfg) {
  return glasso_path(S, {lambda}, cfg).front();
}

std::vector<int> cv_fold_assignment(int n, int folds, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 eng(mix_seed(seed, 0xf01d5ULL));
  std::shuffle(idx.begin(), idx.end(), eng);
  std::vector<int> fold(n);
  for (int i = 0; i < n; ++i) fold[idx[i]] = i % folds;
  return fold;
}

std::vector<double> default_lambda_grid(const CovMatrix& S, int points) {
  const Eigen::Index p = S.values.rows();
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      if (j != k) lmax = std::max(lmax, std::abs(S.values(j, k)));
  if (lmax <= 0.0) lmax = 1.0;
  std::vector<double> grid(points);
  const double lmin = 0.01 * lmax;
  for (int i = 0; i < points; ++i) {
    double f = (points == 1) ? 0.0 : static_cast<double>(i) / (points - 1);
    grid[i] = lmax * std::pow(lmin / lmax, f);
  }
  return grid;
}

namespace {

Matrix centered_cov(const Matrix& rows, const Vector& mean) {
  Matrix C = rows.rowwise() - mean.transpose();
  return (C.transpose() * C) / static_cast<double>(rows.rows());
}

double gaussian_score(const Matrix& theta, const Matrix& s_test) {
  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return logdet - (s_test.array() * theta.array()).sum();
}

}  // namespace

GlassoCvResult glasso_cv(const DataMatrix& X, const std::vector<double>& lambda_grid,
                         const SolverConfig& cfg) {
  if (lambda_grid.empty()) throw InvalidInput("glasso_cv: empty lambda grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (lambda_grid[i] <= 0.0) throw InvalidInput("glasso_cv: grid must be strictly positive");
    if (i > 0 && lambda_grid[i] >= lambda_grid[i - 1])
      throw InvalidInput("glasso_cv: grid must be sorted descending");
  }
  const int n = X.n();
  const int folds = cfg.cv_folds;
  if (folds < 2) throw InvalidInput("glasso_cv: cv_folds must be >= 2");
  if (n < folds) throw InvalidInput("glasso_cv: n < cv_folds");

  std::vector<int> assign = cv_fold_assignment(n, folds, cfg.seed);
  std::vector<double> mean_scores(lambda_grid.size(), 0.0);

  for (int f = 0; f < folds; ++f) {
    std::vector<int> train, test;
    for (int i = 0; i < n; ++i) (assign[i] == f ? test : train).push_back(i);
    Matrix Xtr(train.size(), X.d()), Xte(test.size(), X.d());
    for (std::size_t i = 0; i < train.size(); ++i) Xtr.row(i) = X.values.row(train[i]);
    for (std::size_t i = 0; i < test.size(); ++i) Xte.row(i) = X.values.row(test[i]);
    Vector mean = Xtr.colwise().mean();
    CovMatrix Str(centered_cov(Xtr, mean));
    Matrix Ste = centered_cov(Xte, mean);
    auto path = glasso_path(Str, lambda_grid, cfg);
    for (std::size_t g = 0; g < lambda_grid.size(); ++g)
      mean_scores[g] += gaussian_score(path[g].theta, Ste) / folds;
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < lambda_grid.size(); ++g)
    if (mean_scores[g] > mean_scores[best]) best = g;

  Vector mean = X.values.colwise().mean();
  CovMatrix Sfull(centered_cov(X.values, mean));
  Matrix theta = glasso(Sfull, lambda_grid[best], cfg).theta;
  return {std::move(theta), lambda_grid[best], std::move(mean_scores)};
}

ScaledLassoResult scaled_lasso(const Matrix& X, const Vector& y, double lambda0,
                               const SolverConfig& cfg) {
  if (lambda0 <= 0.0) throw InvalidInput("scaled_lasso: lambda0 must be positive");
  const double n = static_cast<double>(X.rows());
  const double sigma_floor = 1e-8;
  Matrix gram = (X.transpose() * X) / n;
  Vector xty = (X.transpose() * y) / n;

  double sigma = std::max(y.norm() / std::sqrt(n), sigma_floor);
  Vector beta = Vector::Zero(X.cols());
  for (int it = 0; it < cfg.max_iter; ++it) {
    beta = lasso_gram(gram, xty, sigma * lambda0, cfg, beta);
    double sigma_new = (y - X * beta).norm() / std::sqrt(n);
    sigma_new = std::max(sigma_new, sigma_floor);
    const bool done = std::abs(sigma_new - sigma) < cfg.tol * std::max(1.0, sigma);
    sigma = sigma_new;
    if (done) break;
  }
  return {std::move(beta), sigma, sigma < 1e-6};
}

MProgramResult m_program(const CovMatrix& sigma_hat, double mu, const SolverConfig& cfg) {
  if (mu <= 0.0) throw InvalidInput("m_program: mu must be positive");
  const Eigen::Index d = sigma_hat.values.rows();
  const Matrix& S = sigma_hat.values;

  MProgramResult res;
  res.m = Matrix::Zero(d, d);
  res.fallback_row.assign(d, false);

  for (Eigen::Index i = 0; i < d; ++i) {
    Vector ei = Vector::Zero(d);
    ei[i] = 1.0;
    bool ok = false;
    Vector m = Vector::Zero(d);
    Vector grad = ei;  // e_i - S m
    double change = 0.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
      change = cd_sweep(S, m, grad, mu);
      if (change < cfg.tol) {
        ok = true;
        break;
      }
    }
    // At a stationary point ||S m - e_i||_inf <= mu holds by the KKT
    // conditions; verify with slack for finite tolerance.
    if (ok && (S * m - ei).cwiseAbs().maxCoeff() > mu + 1e-9) ok = false;
    if (!ok) {
      m.setZero();
      m[i] = 1.0 / S(i, i);
      res.fallback_row[i] = true;
    }
    res.m.row(i) = m.transpose();
  }
  return res;
}

}  // namespace startrek::solvers
