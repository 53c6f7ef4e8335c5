#include "startrek/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace startrek::io {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_cell(const std::string& cell, double& out) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  if (b == e) return false;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

}  // namespace

DataMatrix load_matrix(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open file: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  bool saw_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, delimiter);
    if (rows.empty() && !saw_header) {
      // header detection: any non-numeric first-row cell
      bool numeric = true;
      for (const auto& c : cells) {
        double v;
        if (!parse_cell(c, v)) {
          numeric = false;
          break;
        }
      }
      if (!numeric) {
        labels = cells;
        width = cells.size();
        saw_header = true;
        continue;
      }
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw ShapeError("ragged row at line " + std::to_string(lineno) + ": expected " +
                       std::to_string(width) + " cells, got " + std::to_string(cells.size()));
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      double v;
      if (!parse_cell(cells[c], v))
        throw ParseError(lineno, static_cast<int>(c) + 1, "not a number: '" + cells[c] + "'");
      if (!std::isfinite(v))
        throw ParseError(lineno, static_cast<int>(c) + 1, "non-finite value: '" + cells[c] + "'");
      row[c] = v;
    }
    rows.push_back(std::move(row));
  }

  if (rows.size() < 2 || width < 2)
    throw ShapeError("dataset must be at least 2x2, got " + std::to_string(rows.size()) + "x" +
                     std::to_string(width));

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) out.values(i, j) = rows[i][j];
  if (labels.empty())
    for (std::size_t j = 0; j < width; ++j) labels.push_back("c" + std::to_string(j));
  out.labels = std::move(labels);
  return out;
}

void save_matrix(const std::string& path, const DataMatrix& data, char delimiter) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write file: " + path);
  for (std::size_t j = 0; j < data.labels.size(); ++j) {
    if (j) out << delimiter;
    out << data.labels[j];
  }
  if (!data.labels.empty()) out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.values.cols(); ++j) {
      if (j) out << delimiter;
      std::snprintf(buf, sizeof buf, "%.17g", data.values(i, j));
      out << buf;
    }
    out << '\n';
  }
}

void save_matrix(const std::string& path, const Matrix& values, char delimiter) {
  DataMatrix d;
  d.values = values;
  save_matrix(path, d, delimiter);
}

DataMatrix preprocess(const DataMatrix& X, bool log_transform, bool standardize) {
  DataMatrix out = X;
  if (log_transform) {
    if (out.values.minCoeff() < 0.0)
      throw NegativeUnderLog("log transform requires nonnegative entries");
    out.values = out.values.array().log1p();
  }
  if (standardize) {
    const Eigen::Index n = out.values.rows();
    std::vector<int> bad;
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
      double mean = out.values.col(j).mean();
      out.values.col(j).array() -= mean;
      double var = out.values.col(j).squaredNorm() / static_cast<double>(n - 1);
      if (var <= 1e-24)
        bad.push_back(static_cast<int>(j));
      else
        out.values.col(j) /= std::sqrt(var);
    }
    if (!bad.empty()) throw ZeroVariance(bad);
  }
  return out;
}

}  // namespace startrek::io
