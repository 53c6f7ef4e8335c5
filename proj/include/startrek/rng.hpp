#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace startrek {

// splitmix64 finalizer; used to derive independent stream seeds from
// (seed, stream index) so that parallel work units never share state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Project-wide generator: mt19937_64 keyed per work unit.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : eng_(mix_seed(seed, stream)) {}

  double operator()() { return dist_(eng_); }

  template <typename Derived>
  void fill(Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist_(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

inline const char* rng_generator_name() { return "mt19937_64+splitmix64-streams"; }

}  // namespace startrek
