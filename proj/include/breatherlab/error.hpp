#pragma once

#include <stdexcept>
#include <string>

namespace breatherlab {

// Base of every error the library throws.  The two direct subclasses split
// failures into "the input was wrong" and "the numerics failed", which the
// CLI maps onto exit codes 1 and 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A diagonal (resonant) source component survived; inverting the wave
/// operator would produce a secular term.
class ResonantSourceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SmallDivisorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularJacobianError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoPeriodicOrbitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LightConeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroProbabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace breatherlab
