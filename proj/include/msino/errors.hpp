#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msino {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Mesh ingestion.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerics.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class MissingLabelError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Raised when the Newton system needs a Levenberg shift beyond the allowed
/// maximum; carries the smallest Hessian eigenvalue.
class IndefiniteHessianError : public Error {
 public:
  IndefiniteHessianError(double lambda_min, const std::string& what)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const noexcept { return lambda_min_; }

 private:
  double lambda_min_;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class BacktrackExhausted : public Error {
 public:
  using Error::Error;
};

/// Training loss left the finite range or crossed the divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(double loss, const std::string& what) : Error(what), loss_(loss) {}
  double loss() const noexcept { return loss_; }

 private:
  double loss_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace msino
