#ifndef GRASPFORCE_ERRORS_HPP
#define GRASPFORCE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace graspforce {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation (bad units, negative force, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Contact normal (anti)parallel to the grasp axis; no tangential basis exists.
class DegenerateBasisError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Grasp matrix lost rank (coincident or degenerate contact geometry).
class SingularConfigError : public Error {
public:
  using Error::Error;
};

/// Adaptive quadrature failed to reach the requested tolerance.
class QuadratureError : public Error {
public:
  QuadratureError(const std::string& msg, double error_estimate, long evaluations)
      : Error(msg), error_estimate(error_estimate), evaluations(evaluations) {}
  double error_estimate;
  long evaluations;
};

/// No optimizer start reached the residual tolerance.
class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string& msg, double best_residual)
      : Error(msg), best_residual(best_residual) {}
  double best_residual;
};

/// A slip-state subproblem has no solution with nonnegative normal forces.
class InfeasibleGraspError : public Error {
public:
  using Error::Error;
};

/// No slip-state hypothesis yields an equilibrium for the required wrench.
class UngraspableError : public Error {
public:
  UngraspableError(const std::string& msg, double best_residual)
      : Error(msg), best_residual(best_residual) {}
  double best_residual;
};

/// Feedback that cannot arise from gravity alone (moment parallel to gravity).
class InconsistentFeedbackError : public Error {
public:
  using Error::Error;
};

/// Line-intersection problem too close to parallel to solve reliably.
class IllConditionedError : public Error {
public:
  IllConditionedError(const std::string& msg, double condition)
      : Error(msg), condition(condition) {}
  double condition;
};

/// Malformed input file; `byte_offset` points at the offending location.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg), byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

}  // namespace graspforce

#endif  // GRASPFORCE_ERRORS_HPP
