#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bfda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVec = std::vector<Eigen::Index>;

/// Base class of all library errors. The subtype determines the process
/// exit code reported by the CLI and the status code of the C API.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (exit code 2).
class config_error : public error {
 public:
  using error::error;
};

/// Unparseable, inconsistent, or invalid input data (exit code 3).
class data_error : public error {
 public:
  using error::error;
};

/// Numerical failure: factorization breakdown, non-finite values (exit code 4).
class numeric_error : public error {
 public:
  using error::error;
};

}  // namespace bfda
