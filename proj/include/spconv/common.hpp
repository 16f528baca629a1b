#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spconv {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

// Error hierarchy. The CLI maps DataError to exit code 3 and NumericalError
// to exit code 4.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid input: bad dataset, bad weights, violated precondition.
class DataError : public Error {
public:
  using Error::Error;
};

// Malformed text input. `line` is 1-based, 0 when not applicable.
class ParseError : public DataError {
public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Singular systems, failed optimizer, parameter outside an admissible domain.
class NumericalError : public Error {
public:
  using Error::Error;
};

// A test statistic with its reference-distribution p-value.
template <typename Scalar = double>
struct TestResult {
  Scalar statistic{0};
  Scalar p_value{1};
  Scalar df{0};
};

}  // namespace spconv
