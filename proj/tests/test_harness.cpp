#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "startrek/harness.hpp"
#include "test_util.hpp"

using namespace startrek;

TEST_CASE("config_from_json: round trip and strictness") {
  harness::ExperimentConfig cfg;
  cfg.mode = "ggm";
  cfg.n = 123;
  cfg.graph_kind = "knn";
  cfg.q = 0.17;
  cfg.seed = 42;
  auto back = harness::config_from_json(harness::config_to_json(cfg));
  CHECK(back.n == 123);
  CHECK(back.graph_kind == "knn");
  CHECK(back.q == 0.17);
  CHECK(back.seed == 42);

  CHECK_THROWS_AS(harness::config_from_json("{\"spec_version\":1,\"bogus\":3}"), ConfigError);
  CHECK_THROWS_AS(harness::config_from_json("{\"mode\":\"ggm\"}"), ConfigError);
  CHECK_THROWS_AS(harness::config_from_json("{\"spec_version\":2}"), ConfigError);
  CHECK_THROWS_AS(harness::config_from_json("not json at all"), ConfigError);
  CHECK_THROWS_AS(harness::config_from_json("{\"spec_version\":1,\"q\":1.5}"), ConfigError);
}

TEST_CASE("sample_ggm_data: sample covariance approaches the inverse precision") {
  Matrix theta = test_util::ar1(6, 0.0);
  theta(0, 1) = theta(1, 0) = 0.4;
  theta += 0.5 * Matrix::Identity(6, 6);
  const int n = 60000;
  Matrix X = harness::sample_ggm_data(theta, n, 12);
  Matrix S = X.transpose() * X / n;
  Matrix target = theta.inverse();
  CHECK((S - target).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("sample_ggm_data: deterministic in the seed") {
  Matrix theta = Matrix::Identity(4, 4);
  CHECK(harness::sample_ggm_data(theta, 10, 3) == harness::sample_ggm_data(theta, 10, 3));
  CHECK(harness::sample_ggm_data(theta, 10, 3) != harness::sample_ggm_data(theta, 10, 4));
}

TEST_CASE("run_ggm_experiment: report shape and recomputable summaries") {
  harness::ExperimentConfig cfg;
  cfg.mode = "ggm";
  cfg.graph_kind = "hub";
  cfg.d = 20;
  cfg.p_groups = 4;
  cfg.n = 150;
  cfg.B = 200;
  cfg.replicates = 4;
  cfg.k_tau = 3;
  cfg.q = 0.2;
  cfg.seed = 5;
  cfg.lambda_policy = "fixed";
  cfg.lambda_fixed = 0.15;
  cfg.threads = 4;
  auto report = harness::run_ggm_experiment(cfg);
  REQUIRE(report.replicates.size() == 4);
  CHECK(report.failed_count == 0);
  double sum_fdp = 0, sum_pow = 0;
  for (const auto& r : report.replicates) {
    CHECK(r.fdp >= 0.0);
    CHECK(r.fdp <= 1.0);
    CHECK(r.power >= 0.0);
    CHECK(r.power <= 1.0);
    CHECK(r.d0 == 16);
    CHECK(r.n_hubs == 4);
    sum_fdp += r.fdp;
    sum_pow += r.power;
  }
  CHECK(report.mean_fdp == doctest::Approx(sum_fdp / 4).epsilon(1e-12));
  CHECK(report.mean_power == doctest::Approx(sum_pow / 4).epsilon(1e-12));
  CHECK(report.mean_q_d0_over_d == doctest::Approx(0.2 * 16.0 / 20.0).epsilon(1e-12));
}

TEST_CASE("run_ggm_experiment: thread count does not change results") {
  harness::ExperimentConfig cfg;
  cfg.mode = "ggm";
  cfg.graph_kind = "random";
  cfg.d = 15;
  cfg.p_groups = 3;
  cfg.n = 100;
  cfg.B = 100;
  cfg.replicates = 3;
  cfg.q = 0.2;
  cfg.seed = 8;
  cfg.lambda_policy = "fixed";
  cfg.lambda_fixed = 0.2;
  cfg.threads = 1;
  auto a = harness::run_ggm_experiment(cfg);
  cfg.threads = 3;
  auto b = harness::run_ggm_experiment(cfg);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(a.replicates[r].fdp == b.replicates[r].fdp);
    CHECK(a.replicates[r].n_selected == b.replicates[r].n_selected);
  }
}

TEST_CASE("run_multitask_experiment: smoke run with planted hubs") {
  harness::ExperimentConfig cfg;
  cfg.mode = "multitask";
  cfg.n = 200;
  cfg.d1 = 8;
  cfg.d2 = 20;
  cfg.hub_count = 2;
  cfg.k_tau = 3;
  cfg.q = 0.1;
  cfg.B = 300;
  cfg.replicates = 2;
  cfg.signal = 1.5;
  cfg.seed = 3;
  cfg.threads = 2;
  auto report = harness::run_multitask_experiment(cfg);
  CHECK(report.failed_count == 0);
  for (const auto& r : report.replicates) {
    CHECK(r.n_hubs == 2);
    CHECK(r.d0 == 6);
  }
  CHECK(report.mean_power > 0.4);
}

TEST_CASE("report writers: JSON parses back, CSV has the documented header") {
  harness::ExperimentConfig cfg;
  cfg.mode = "ggm";
  cfg.graph_kind = "hub";
  cfg.d = 12;
  cfg.p_groups = 2;
  cfg.n = 80;
  cfg.B = 50;
  cfg.replicates = 2;
  cfg.q = 0.2;
  cfg.lambda_policy = "fixed";
  cfg.lambda_fixed = 0.2;
  auto report = harness::run_ggm_experiment(cfg);
  auto dir = std::filesystem::temp_directory_path();
  std::string jpath = (dir / "startrek_report_test.json").string();
  std::string cpath = (dir / "startrek_reps_test.csv").string();
  harness::write_report_json(jpath, report);
  harness::write_replicates_csv(cpath, report);
  std::ifstream jin(jpath);
  std::string jtext((std::istreambuf_iterator<char>(jin)), std::istreambuf_iterator<char>());
  CHECK(jtext.find("\"mean_fdp\"") != std::string::npos);
  CHECK(jtext.find("\"replicates\"") != std::string::npos);
  std::ifstream cin(cpath);
  std::string header;
  std::getline(cin, header);
  CHECK(header == "replicate,fdp,power,n_selected,d0,runtime_ms");
  int lines = 0;
  std::string line;
  while (std::getline(cin, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 2);
  std::remove(jpath.c_str());
  std::remove(cpath.c_str());
}

TEST_CASE("verify_ccb: identical covariances give zero deviation") {
  Matrix cov = harness::ar1_cov(8, 0.5);
  auto grid = harness::default_t_grid(8, 15);
  auto table = harness::verify_ccb(cov, cov, grid, 20000, 9, 4);
  CHECK(table.n_stable > 0);
  CHECK(table.sup_dev == 0.0);
  for (const auto& r : table.rows) {
    CHECK(r.p_num <= 1.0);
    CHECK(r.p_den >= 0.0);
    if (r.stable) CHECK(r.p_num == r.p_den);
  }
}

TEST_CASE("verify_ccb: different covariances register a deviation") {
  Matrix u = harness::counterexample_cov(10, 0.9);
  Matrix v = harness::counterexample_cov(10, 0.0);
  auto grid = harness::default_t_grid(10, 20);
  auto table = harness::verify_ccb(u, v, grid, 100000, 11, 4);
  CHECK(table.sup_dev > 0.01);
}

TEST_CASE("verify_ccb: deterministic across thread counts") {
  Matrix cov = harness::ar1_cov(5, 0.3);
  auto grid = harness::default_t_grid(5, 10);
  auto a = harness::verify_ccb(cov, harness::ar1_cov(5, 0.6), grid, 30000, 2, 1);
  auto b = harness::verify_ccb(cov, harness::ar1_cov(5, 0.6), grid, 30000, 2, 8);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    CHECK(a.rows[t].p_num == b.rows[t].p_num);
    CHECK(a.rows[t].p_den == b.rows[t].p_den);
  }
}

TEST_CASE("counterexample_cov / ar1_cov shapes and validation") {
  CHECK_THROWS_AS(harness::counterexample_cov(2, 0.5), InvalidInput);
  Matrix c = harness::counterexample_cov(5, 0.7);
  CHECK(c(0, 1) == 0.7);
  CHECK(c(3, 4) == 1.0);
  CHECK(c(0, 3) == 0.0);
  Matrix a = harness::ar1_cov(4, 0.5);
  CHECK(a(0, 3) == doctest::Approx(0.125));
}
