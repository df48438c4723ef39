#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tmera {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong shapes, non-antisymmetric couplings, bad indices.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A matrix that is not a physical Gaussian covariance (singular value > 1).
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Linear algebra too ill-conditioned to give a trustworthy answer.
class NumericallyDegenerate : public Error {
 public:
  NumericallyDegenerate(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  /// Reciprocal condition estimate of the offending matrix.
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Raised when an effective Hamiltonian would need an infinite coupling.
class DivergentCoupling : public Error {
 public:
  DivergentCoupling(const std::string& what, std::size_t mode, double lambda)
      : Error(what), mode_(mode), lambda_(lambda) {}
  std::size_t mode() const noexcept { return mode_; }
  double lambda() const noexcept { return lambda_; }

 private:
  std::size_t mode_;
  double lambda_;
};

/// Bad run configuration (unknown key, unparsable value, missing file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tmera
