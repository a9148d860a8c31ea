#pragma once

#include <stdexcept>
#include <string>

namespace conewave {

/// Raised when an argument violates a documented precondition or invariant.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is evaluated outside the domain where it is defined
/// (angle parameter on the shifted axis, the ODE solution at t >= 0, a field
/// sampled outside its grid, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A quadrature rule met a non-finite integrand value.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double t, double r)
      : std::runtime_error(what), t_(t), r_(r) {}

  double t() const noexcept { return t_; }
  double r() const noexcept { return r_; }

 private:
  double t_;
  double r_;
};

/// The time stepper produced a non-finite value before the blow-up threshold.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double t, double r)
      : std::runtime_error(what), t_(t), r_(r) {}

  double t() const noexcept { return t_; }
  double r() const noexcept { return r_; }

 private:
  double t_;
  double r_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace conewave
