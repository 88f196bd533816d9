#pragma once

#include <stdexcept>
#include <string>

namespace algmech {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed expression source. `offset` is the byte position of the problem.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

/// Evaluation outside the domain of a function (log of non-positive,
/// division by zero, sqrt of negative, non-integer power of a negative base).
struct DomainError : Error {
  using Error::Error;
};

struct UnboundVariable : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct TooFewSamples : Error {
  using Error::Error;
};

/// Fiber Hessian of the Lagrangian too ill-conditioned to invert; the
/// dynamics is implicit at this point and the explicit integrator refuses it.
struct SingularLagrangian : Error {
  using Error::Error;
};

struct SingularSaddle : Error {
  using Error::Error;
};

struct SingularReducedHessian : Error {
  using Error::Error;
};

struct ConstraintDrift : Error {
  using Error::Error;
};

struct NonFiniteState : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct RankDeficientConstraint : Error {
  using Error::Error;
};

struct NotQuasiLie : Error {
  using Error::Error;
};

struct CompatibilityViolation : Error {
  using Error::Error;
};

struct FrameDegenerate : Error {
  using Error::Error;
};

struct SpecError : Error {
  using Error::Error;
};

}  // namespace algmech
