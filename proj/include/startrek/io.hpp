#pragma once

#include <string>

#include "startrek/types.hpp"

namespace startrek::io {

// CSV ingestion: rows are observations, columns are variables. A header row is
// detected when any first-row cell fails to parse as a number; labels default
// to c0..c{d-1} otherwise.
DataMatrix load_matrix(const std::string& path, char delimiter = ',');

// Full-precision (%.17g) write so that a round trip is bit-exact.
void save_matrix(const std::string& path, const DataMatrix& data, char delimiter = ',');
void save_matrix(const std::string& path, const Matrix& values, char delimiter = ',');

DataMatrix preprocess(const DataMatrix& X, bool log_transform, bool standardize);

}  // namespace startrek::io
