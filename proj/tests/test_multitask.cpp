#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "startrek/multitask.hpp"
#include "startrek/rng.hpp"
#include "test_util.hpp"

using namespace startrek;
using test_util::random_matrix;

TEST_CASE("fit_multitask: shape validation") {
  Matrix X = random_matrix(10, 3, 1);
  Matrix Y = random_matrix(9, 2, 2);
  CHECK_THROWS_AS(multitask::fit_multitask(X, Y), InvalidInput);
}

TEST_CASE("fit_multitask: noiseless single response flags degenerate noise") {
  Matrix X = random_matrix(60, 2, 3);
  Matrix Y = 2.0 * X.col(0);
  multitask::MultitaskConfig cfg;
  cfg.solver.tol = 1e-12;
  auto fit = multitask::fit_multitask(X, Y, cfg);
  CHECK(fit.degenerate_noise[0]);
  CHECK(fit.theta_hat(0, 0) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("fit_multitask: debiasing identity with the fitted pieces") {
  const int n = 80, d2 = 6, d1 = 3;
  Matrix X = random_matrix(n, d2, 5);
  Matrix Y = random_matrix(n, d1, 6);
  multitask::MultitaskConfig cfg;
  cfg.solver.tol = 1e-10;
  auto fit = multitask::fit_multitask(X, Y, cfg);
  for (int j = 0; j < d1; ++j) {
    Vector resid = Y.col(j) - X * fit.theta_hat.row(j).transpose();
    Vector expect = fit.theta_hat.row(j).transpose() +
                    fit.m * (X.transpose() * resid) / static_cast<double>(n);
    CHECK((fit.theta_d.row(j).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  // decorrelator rows satisfy their own constraint unless flagged
  double mu = cfg.mu_a * std::sqrt(std::log(static_cast<double>(d2)) / n);
  for (int i = 0; i < d2; ++i) {
    if (fit.m_fallback_row[i]) continue;
    Vector ei = Vector::Zero(d2);
    ei[i] = 1.0;
    CHECK((fit.sigma_hat.values * fit.m.row(i).transpose() - ei).cwiseAbs().maxCoeff() <=
          mu + 1e-9);
  }
}

TEST_CASE("fit_multitask: near-orthonormal design recovers strong coefficients") {
  const int n = 300, d2 = 10, d1 = 2;
  Matrix A = random_matrix(n, d2, 7);
  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix X = std::sqrt(static_cast<double>(n)) *
             (qr.householderQ() * Matrix::Identity(n, d2));
  Matrix beta = Matrix::Zero(d1, d2);
  beta(0, 1) = 1.5;
  beta(0, 4) = -2.0;
  beta(1, 7) = 1.0;
  Matrix noise = 0.3 * random_matrix(n, d1, 8);
  Matrix Y = X * beta.transpose() + noise;
  auto fit = multitask::fit_multitask(X, Y);
  CHECK((fit.theta_d - beta).cwiseAbs().maxCoeff() < 0.25);
  CHECK(std::abs(fit.theta_d(0, 4) + 2.0) < 0.2);
}

TEST_CASE("select_hub_responses: planted bipartite hubs are found, nulls are kept out") {
  const int n = 400, d2 = 30, d1 = 10, k_tau = 3;
  Matrix beta = Matrix::Zero(d1, d2);
  // responses 0..2 are hubs with k_tau strong predictors; the rest get at most
  // k_tau - 1 nonzeros, so they sit in the null
  for (int j = 0; j < 3; ++j)
    for (int s = 0; s < k_tau; ++s) beta(j, 5 * j + s) = (s % 2 ? -1.5 : 1.5);
  for (int j = 3; j < d1; ++j)
    for (int s = 0; s < k_tau - 1; ++s) beta(j, 3 * j + s) = 1.5;

  NormalStream xs(91, 0), es(91, 1);
  Matrix X(n, d2), E(n, d1);
  xs.fill(X);
  es.fill(E);
  Matrix Y = X * beta.transpose() + E;

  auto fit = multitask::fit_multitask(X, Y);
  select::HypothesisConfig cfg;
  cfg.k_tau = k_tau;
  cfg.q = 0.1;
  auto res = multitask::select_hub_responses(fit, cfg, 1000, 17, 0);
  for (int j = 0; j < 3; ++j)
    CHECK(std::find(res.selected.begin(), res.selected.end(), j) != res.selected.end());
  // FDP stays small: at most one null response may slip in at q = 0.1
  int false_sel = 0;
  for (int j : res.selected)
    if (j >= 3) ++false_sel;
  CHECK(false_sel <= 1);
}

TEST_CASE("select_hub_responses: deterministic across thread counts") {
  const int n = 120, d2 = 12, d1 = 4;
  Matrix X = random_matrix(n, d2, 55);
  Matrix Y = random_matrix(n, d1, 56);
  auto fit = multitask::fit_multitask(X, Y);
  select::HypothesisConfig cfg;
  cfg.k_tau = 2;
  cfg.q = 0.2;
  auto a = multitask::select_hub_responses(fit, cfg, 300, 3, 1);
  auto b = multitask::select_hub_responses(fit, cfg, 300, 3, 4);
  CHECK(a.alpha == b.alpha);
  CHECK(a.selected == b.selected);
}
