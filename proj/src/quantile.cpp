#include "startrek/quantile.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "startrek/parallel.hpp"
#include "startrek/rng.hpp"

namespace startrek::quantile {

Matrix multiplier_matrix(int B, int n, std::uint64_t seed, int threads) {
  Matrix xi(B, n);
  parallel_for(B, threads, [&](std::size_t b) {
    NormalStream stream(seed, b);
    Vector row(n);
    stream.fill(row);
    xi.row(b) = row.transpose();
  });
  return xi;
}

BootstrapEnsemble ensemble_from_scores(const Matrix& xi, const Matrix& score_matrix,
                                       std::vector<Edge> edges, std::uint64_t seed) {
  const double n = static_cast<double>(score_matrix.rows());
  BootstrapEnsemble ens;
  ens.draws = (xi * score_matrix).cwiseAbs() / std::sqrt(n);
  ens.edge_universe = std::move(edges);
  ens.seed = seed;
  return ens;
}

BootstrapEnsemble build_ensemble(const ggm::ScoreTensor& scores, int B, std::uint64_t seed,
                                 int threads) {
  if (B < 1) throw InvalidInput("build_ensemble: B must be >= 1");
  Matrix xi = multiplier_matrix(B, static_cast<int>(scores.scores.rows()), seed, threads);
  return ensemble_from_scores(xi, scores.scores, scores.edge_universe, seed);
}

Vector draw_maxima(const BootstrapEnsemble& ens, const std::vector<int>& columns) {
  if (columns.empty()) throw InvalidInput("quantile query: empty edge set");
  const int B = ens.B();
  Vector t = ens.draws.col(columns[0]);
  for (std::size_t c = 1; c < columns.size(); ++c)
    t = t.cwiseMax(ens.draws.col(columns[c]));
  (void)B;
  return t;
}

double c_hat(const BootstrapEnsemble& ens, double alpha, const std::vector<int>& columns) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("c_hat: alpha must be in (0,1]");
  if (alpha == 1.0) return 0.0;
  Vector t = draw_maxima(ens, columns);
  const int B = ens.B();
  int k = static_cast<int>(std::ceil((1.0 - alpha) * B));
  k = std::clamp(k, 1, B);
  std::vector<double> v(t.data(), t.data() + B);
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  return v[k - 1];
}

double c_hat_inv(const BootstrapEnsemble& ens, double t, const std::vector<int>& columns) {
  Vector m = draw_maxima(ens, columns);
  int count = 0;
  for (Eigen::Index b = 0; b < m.size(); ++b)
    if (m[b] >= t) ++count;
  return static_cast<double>(count) / ens.B();
}

BootstrapEnsemble gaussian_quantile_ensemble(const Matrix& M, const CovMatrix& sigma_hat,
                                             double sigma, int B, std::uint64_t seed,
                                             int threads) {
  if (sigma <= 0.0) throw InvalidInput("gaussian_quantile_ensemble: sigma must be positive");
  if (B < 1) throw InvalidInput("gaussian_quantile_ensemble: B must be >= 1");
  Matrix cov = sigma * sigma * M * sigma_hat.values * M.transpose();
  cov = ((cov + cov.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success)
    throw InvalidCovariance("gaussian_quantile_ensemble: eigendecomposition failed");
  Vector evals = es.eigenvalues();
  if (evals.minCoeff() < -1e-6)
    throw InvalidCovariance("gaussian_quantile_ensemble: covariance has eigenvalue below -1e-6");
  for (Eigen::Index i = 0; i < evals.size(); ++i) evals[i] = std::max(evals[i], 1e-12);
  Matrix L = es.eigenvectors() * evals.cwiseSqrt().asDiagonal();

  const Eigen::Index d = cov.rows();
  BootstrapEnsemble ens;
  ens.draws.resize(B, d);
  ens.seed = seed;
  ens.edge_universe.reserve(d);
  for (Eigen::Index k = 0; k < d; ++k) ens.edge_universe.emplace_back(0, static_cast<int>(k));
  parallel_for(B, threads, [&](std::size_t b) {
    NormalStream stream(seed, b);
    Vector g(d);
    stream.fill(g);
    ens.draws.row(b) = (L * g).cwiseAbs().transpose();
  });
  return ens;
}

namespace {
constexpr char kMagic[4] = {'S', 'T', 'K', 'B'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_ensemble(const std::string& path, const BootstrapEnsemble& ens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write ensemble file: " + path);
  out.write(kMagic, 4);
  auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  put32(kVersion);
  put64(static_cast<std::uint64_t>(ens.B()));
  put64(static_cast<std::uint64_t>(ens.n_edges()));
  for (const Edge& e : ens.edge_universe) {
    put32(static_cast<std::uint32_t>(e.first));
    put32(static_cast<std::uint32_t>(e.second));
  }
  for (int b = 0; b < ens.B(); ++b)
    for (int e = 0; e < ens.n_edges(); ++e) {
      double v = ens.draws(b, e);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

BootstrapEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open ensemble file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError(1, 1, "bad ensemble magic bytes");
  auto get32 = [&]() {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get64 = [&]() {
    std::uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  std::uint32_t version = get32();
  if (version != kVersion) throw ParseError(1, 5, "unsupported ensemble version");
  std::uint64_t B = get64();
  std::uint64_t E = get64();
  BootstrapEnsemble ens;
  ens.edge_universe.reserve(E);
  for (std::uint64_t e = 0; e < E; ++e) {
    int j = static_cast<int>(get32());
    int k = static_cast<int>(get32());
    ens.edge_universe.emplace_back(j, k);
  }
  ens.draws.resize(B, E);
  for (std::uint64_t b = 0; b < B; ++b)
    for (std::uint64_t e = 0; e < E; ++e) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      ens.draws(b, e) = v;
    }
  if (!in) throw ParseError(0, 0, "truncated ensemble file");
  return ens;
}

}  // namespace startrek::quantile
