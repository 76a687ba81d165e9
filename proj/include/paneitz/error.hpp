#pragma once

#include <stdexcept>
#include <string>

namespace paneitz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A precondition on an argument was violated (bad exponent, n < 5, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two fields (or a field and an operator) live on different grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// The sufficient coercivity witness min(W) + lambda > 0 failed.
class CoercivityError : public Error {
 public:
  CoercivityError(const std::string& what, double margin) : Error(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual, int iterations)
      : Error(what), last_residual_(last_residual), iterations_(iterations) {}
  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

/// A discrete order relation that the analysis relies on was broken.
class OrderViolation : public Error {
 public:
  OrderViolation(const std::string& what, int iteration, double magnitude)
      : Error(what), iteration_(iteration), magnitude_(magnitude) {}
  int iteration() const noexcept { return iteration_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  int iteration_;
  double magnitude_;
};

/// No sub/supersolution pair of the form s*e could be found.
class NoBracket : public Error {
 public:
  using Error::Error;
};

/// A certificate that a solver requires as its hypothesis does not hold.
class ConditionNotMet : public Error {
 public:
  ConditionNotMet(const std::string& what, double margin) : Error(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

}  // namespace paneitz
