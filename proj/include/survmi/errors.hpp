#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace survmi {

// Base class for all domain errors raised by the library. The CLI maps
// these to exit code 1; usage problems are handled separately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t row, std::size_t col)
      : Error(msg + " (row " + std::to_string(row) + ", column " +
              std::to_string(col) + ")"),
        row(row),
        column(col) {}
  std::size_t row;
  std::size_t column;
};

class NoEventsError : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

// Carries the last Newton iterate so callers can inspect how far the
// optimizer got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::vector<double> last_iterate)
      : Error(msg), last_beta(std::move(last_iterate)) {}
  std::vector<double> last_beta;
};

class UnusableColumnError : public Error {
 public:
  using Error::Error;
};

class EmptyFilterError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace survmi
