#pragma once

#include <stdexcept>
#include <string>

namespace betashrink {

// Raised for malformed or out-of-domain input data (CLI exit code 2).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Raised for numerical breakdowns such as a singular information matrix
// (CLI exit code 3).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace betashrink
