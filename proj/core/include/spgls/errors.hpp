#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spgls {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateApex,
  kCenteredProblem,
  kNumericalFailure,
  kState,
  kSize,
  kParse,
  kEmptyMatrix,
  kUnsupportedDimension,
  kAssumptionViolated,
};

const char* to_string(ErrorCode code);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

/// Raised when a sphere point sits on the pole alpha~ = 1 of the inverse map.
/// Carries the SCLS objective at that point so callers can still report it.
class DegenerateApex : public Error {
 public:
  DegenerateApex(const std::string& what, double objective)
      : Error(ErrorCode::kDegenerateApex, what), objective_(objective) {}

  double objective() const noexcept { return objective_; }

 private:
  double objective_;
};

/// g = 0: the minimizer is a min-eigenvector and lies outside every Krylov
/// space generated from g. Use the dense oracle instead.
class CenteredProblem : public Error {
 public:
  explicit CenteredProblem(const std::string& what)
      : Error(ErrorCode::kCenteredProblem, what) {}
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what)
      : Error(ErrorCode::kNumericalFailure, what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what)
      : Error(ErrorCode::kState, what) {}
};

class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what)
      : Error(ErrorCode::kSize, what) {}
};

/// Parse failure with a 1-based position. `column` is 0 when the error is not
/// tied to a specific field.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(ErrorCode::kParse, what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class EmptyMatrixError : public Error {
 public:
  explicit EmptyMatrixError(const std::string& what)
      : Error(ErrorCode::kEmptyMatrix, what) {}
};

class UnsupportedDimension : public Error {
 public:
  explicit UnsupportedDimension(const std::string& what)
      : Error(ErrorCode::kUnsupportedDimension, what) {}
};

/// The whole optimal set of the sphere problem is the apex, i.e. the game has
/// no attained optimum (its infimum is only approached as alpha -> infinity).
class AssumptionViolated : public Error {
 public:
  AssumptionViolated(const std::string& what, double objective)
      : Error(ErrorCode::kAssumptionViolated, what), objective_(objective) {}

  double objective() const noexcept { return objective_; }

 private:
  double objective_;
};

}  // namespace spgls
