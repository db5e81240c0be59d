#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdadapt {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with the caller's inputs or configuration. The CLI maps these to
// exit code 1; everything else derived from Error maps to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigurationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failures of the estimation procedures on otherwise valid data.
class EstimationError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public EstimationError {
 public:
  InsufficientDataError(const std::string& what, std::size_t retained)
      : EstimationError(what + " (retained curves: " + std::to_string(retained) + ")"),
        retained_(retained) {}

  std::size_t retained() const noexcept { return retained_; }

 private:
  std::size_t retained_;
};

class DegenerateIncrementError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class NoAdmissibleBandwidthError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class SurfaceError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class GenerationError : public EstimationError {
 public:
  GenerationError(const std::string& what, std::size_t curve)
      : EstimationError("curve " + std::to_string(curve) + ": " + what), curve_(curve) {}

  std::size_t curve() const noexcept { return curve_; }

 private:
  std::size_t curve_;
};

class EvaluationError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class ExperimentError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

}  // namespace fdadapt
