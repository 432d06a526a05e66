#ifndef DYSON_EQ_ERRORS_HPP
#define DYSON_EQ_ERRORS_HPP

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyson_eq {

// Base of every error raised by the library. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or preconditions (exit code 2 in the CLI).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class RankOutOfRange : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class EmptyInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class TooLarge : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class InfeasibleSupport : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class ZeroRowOrColumn : public InvalidInput {
 public:
  ZeroRowOrColumn(std::vector<std::size_t> rows, std::vector<std::size_t> cols)
      : InvalidInput(describe(rows, cols)), rows_(std::move(rows)), cols_(std::move(cols)) {}

  const std::vector<std::size_t>& rows() const { return rows_; }
  const std::vector<std::size_t>& cols() const { return cols_; }

 private:
  static std::string describe(const std::vector<std::size_t>& rows,
                              const std::vector<std::size_t>& cols) {
    std::ostringstream os;
    os << "matrix has all-zero";
    auto list = [&os](const char* what, const std::vector<std::size_t>& idx) {
      os << ' ' << what << " [";
      for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? "," : "") << idx[k];
      os << ']';
    };
    if (!rows.empty()) list("rows", rows);
    if (!cols.empty()) list("columns", cols);
    return os.str();
  }

  std::vector<std::size_t> rows_;
  std::vector<std::size_t> cols_;
};

// Numerical failures (exit code 3 in the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(std::string what, long iterations, double last_residual)
      : NumericalError(what + ": no convergence after " + std::to_string(iterations) +
                       " iterations (residual " + std::to_string(last_residual) + ")"),
        iterations_(iterations),
        last_residual_(last_residual) {}

  long iterations() const { return iterations_; }
  double last_residual() const { return last_residual_; }

 private:
  long iterations_;
  double last_residual_;
};

}  // namespace dyson_eq

#endif  // DYSON_EQ_ERRORS_HPP
