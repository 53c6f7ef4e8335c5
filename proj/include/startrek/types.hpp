#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace startrek {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConvergeFailure : std::runtime_error {
  int iterations;
  double residual;
  ConvergeFailure(const std::string& what, int iters, double resid)
      : std::runtime_error(what + " (iters=" + std::to_string(iters) +
                           ", residual=" + std::to_string(resid) + ")"),
        iterations(iters),
        residual(resid) {}
};

struct DegenerateDenominator : std::runtime_error {
  int index;
  DegenerateDenominator(const std::string& what, int idx)
      : std::runtime_error(what + " at index " + std::to_string(idx)), index(idx) {}
};

struct InvalidCovariance : std::runtime_error {
  explicit InvalidCovariance(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int line_, int col_, const std::string& reason)
      : std::runtime_error("parse error at line " + std::to_string(line_) + ", column " +
                           std::to_string(col_) + ": " + reason),
        line(line_),
        col(col_) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroVariance : std::runtime_error {
  std::vector<int> columns;
  explicit ZeroVariance(std::vector<int> cols)
      : std::runtime_error("zero-variance column(s): " + join(cols)), columns(std::move(cols)) {}
  static std::string join(const std::vector<int>& cols) {
    std::string s;
    for (int c : cols) s += (s.empty() ? "" : ", ") + std::to_string(c);
    return s;
  }
};

struct NegativeUnderLog : std::runtime_error {
  explicit NegativeUnderLog(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Symmetric covariance / Gram matrix with a strictly positive diagonal.
struct CovMatrix {
  Matrix values;

  CovMatrix() = default;
  explicit CovMatrix(Matrix v) : values(std::move(v)) { validate(); }

  int dim() const { return static_cast<int>(values.rows()); }

  void validate() const {
    if (values.rows() != values.cols() || values.rows() < 1)
      throw InvalidInput("CovMatrix must be square and non-empty");
    if (!values.allFinite()) throw InvalidInput("CovMatrix has non-finite entries");
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    if ((values - values.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw InvalidInput("CovMatrix not symmetric within 1e-12 relative");
    if (values.diagonal().minCoeff() <= 0.0)
      throw InvalidInput("CovMatrix diagonal must be strictly positive");
  }
};

struct SolverConfig {
  double lambda = 0.0;
  double mu = 0.0;            // 0 means "use the default mu = sqrt(log d / n)"
  int max_iter = 10000;
  double tol = 1e-7;
  int cv_folds = 5;
  std::uint64_t seed = 0;     // fold assignment and any internal randomization
};

struct DataMatrix {
  Matrix values;              // rows = observations, cols = variables
  std::vector<std::string> labels;

  int n() const { return static_cast<int>(values.rows()); }
  int d() const { return static_cast<int>(values.cols()); }
};

using Edge = std::pair<int, int>;

}  // namespace startrek
