#pragma once

#include <stdexcept>
#include <string>

namespace layerprobe {

// Malformed or inconsistent input data (bad TSV cells, size mismatches,
// unknown identifiers). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure inside a fit or a metric (factorization failure,
// undefined R^2). The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace layerprobe
