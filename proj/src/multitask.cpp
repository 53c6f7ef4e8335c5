#include "startrek/multitask.hpp"

#include <cmath>

#include "startrek/parallel.hpp"
#include "startrek/rng.hpp"

namespace startrek::multitask {

MultitaskFit fit_multitask(const Matrix& X, const Matrix& Y, const MultitaskConfig& cfg) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d2 = X.cols();
  const Eigen::Index d1 = Y.cols();
  if (Y.rows() != n) throw InvalidInput("fit_multitask: X/Y row mismatch");
  if (n < 2) throw InvalidInput("fit_multitask: need n >= 2");

  MultitaskFit fit;
  fit.n = static_cast<int>(n);
  fit.sigma_hat = CovMatrix((X.transpose() * X) / static_cast<double>(n));

  const double mu = cfg.mu_a * std::sqrt(std::log(static_cast<double>(d2)) / n);
  auto mprog = solvers::m_program(fit.sigma_hat, mu, cfg.solver);
  fit.m = std::move(mprog.m);
  fit.m_fallback_row = std::move(mprog.fallback_row);

  const double lambda0 =
      std::sqrt(cfg.lambda_c * cfg.lambda_c * std::log(static_cast<double>(d2)) / n);

  fit.theta_hat.resize(d1, d2);
  fit.theta_d.resize(d1, d2);
  fit.sigma.resize(d1);
  fit.degenerate_noise.assign(d1, false);

  parallel_for(d1, cfg.threads, [&](std::size_t j) {
    auto sl = solvers::scaled_lasso(X, Y.col(j), lambda0, cfg.solver);
    Vector resid = Y.col(j) - X * sl.beta;
    Vector debiased = sl.beta + fit.m * (X.transpose() * resid) / static_cast<double>(n);
    fit.theta_hat.row(j) = sl.beta.transpose();
    fit.theta_d.row(j) = debiased.transpose();
    fit.sigma[j] = sl.sigma_hat;
    fit.degenerate_noise[j] = sl.degenerate_noise;
  });
  return fit;
}

select::SelectionResult select_hub_responses(const MultitaskFit& fit,
                                             const select::HypothesisConfig& cfg, int B,
                                             std::uint64_t seed, int threads) {
  const int d1 = static_cast<int>(fit.theta_d.rows());
  const int d2 = static_cast<int>(fit.theta_d.cols());
  if (cfg.k_tau < 1 || cfg.k_tau > d2)
    throw InvalidInput("select_hub_responses: k_tau out of range");
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw InvalidInput("select_hub_responses: q out of range");

  Vector alpha(d1);
  parallel_for(d1, threads, [&](std::size_t j) {
    auto ens = quantile::gaussian_quantile_ensemble(fit.m, fit.sigma_hat, fit.sigma[j], B,
                                                    mix_seed(seed, 0x6a00 + j), 1);
    Vector stats = fit.theta_d.row(j).cwiseAbs().transpose();
    alpha[j] = select::node_alpha(stats, ens, cfg.k_tau, fit.n);
  });
  return select::bh_select(alpha, cfg.q);
}

}  // namespace startrek::multitask
