#pragma once

#include <stdexcept>
#include <string>

namespace preq {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two operands live in different Hilbert-space dimensions.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A matrix violated the Hermiticity tolerance.
class NotHermitian : public Error {
 public:
  using Error::Error;
};

/// A matrix has an eigenvalue below the positive-semidefinite tolerance.
class NotPositive : public Error {
 public:
  using Error::Error;
};

/// Trace too close to zero to normalize by.
class DegenerateTrace : public Error {
 public:
  using Error::Error;
};

/// A supplied basis fails the orthonormality tolerance.
class NotOrthonormal : public Error {
 public:
  using Error::Error;
};

/// Integrator drift exceeded its monitoring bound; a smaller step is needed.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Index outside the valid range of a trajectory or ensemble.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Scenario or command-line configuration is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace preq
