#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace chemo {

inline std::string format_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. s < 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The motility left the positive regime required by the convergence theory.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// Right-hand side of a singular Neumann problem is not mean-free.
class IncompatibilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve exhausted its budget.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual, int iterations)
      : Error(what + " (relative residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A state invariant (mass, positivity, maximum principle) was breached.
class InvariantViolation : public Error {
 public:
  InvariantViolation(std::string invariant, const std::string& detail)
      : Error("invariant violated: " + invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace chemo
