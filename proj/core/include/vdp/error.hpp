#pragma once

#include <stdexcept>
#include <string>

namespace vdp {

/// Raised when a caller violates a documented precondition (shape mismatch,
/// out-of-range argument, inconsistent configuration).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A forward simulation left the finite/bounded regime.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}

  /// Zero-based index of the first state that failed the guard.
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Numerical breakdown that is not a caller error (non-finite objective,
/// failed factorization).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Line and column are 1-based; column 0 means the
/// whole line.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error(what), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace vdp
