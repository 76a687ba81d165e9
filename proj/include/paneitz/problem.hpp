#pragma once

// P_{g,psi} u = A/u^p - B u^q   (absorption)
// P_{g,psi} u = A/u^p + B u^q   (source)

#include <cmath>
#include <string>
#include <vector>

#include "paneitz/operator.hpp"

namespace paneitz {

enum class Nonlinearity { absorption, source };

inline const char* to_string(Nonlinearity m) { return m == Nonlinearity::absorption ? "absorption" : "source"; }

struct ProblemSpec {
  ScalarField A;
  ScalarField B;
  double p = 3.0;
  double q = 2.0;
  Nonlinearity mode = Nonlinearity::absorption;

  /// +1 for the source sign, -1 for absorption.
  double b_sign() const { return mode == Nonlinearity::source ? 1.0 : -1.0; }

  /// f(x, u) at one grid point.
  double f(std::size_t i, double u) const {
    return A[i] * std::pow(u, -p) + b_sign() * B[i] * std::pow(u, q);
  }
  /// df/du at one grid point.
  double df(std::size_t i, double u) const {
    return -p * A[i] * std::pow(u, -p - 1.0) + b_sign() * q * B[i] * std::pow(u, q - 1.0);
  }

  ScalarField f(const ScalarField& u) const {
    ScalarField out(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(i, u[i]);
    return out;
  }

  bool b_identically_zero() const {
    for (double v : B.values())
      if (v != 0.0) return false;
    return true;
  }
};

/// Outcome of exponent and sign validation; `warnings` carries best-effort
/// notes (e.g. the critical exponent q = 2# - 1 in source mode).
struct ProblemCheck {
  std::vector<std::string> warnings;
  bool critical_exponent = false;
};

inline ProblemCheck validate_problem(const PaneitzOperator& op, const ProblemSpec& prob) {
  op.check_grid(prob.A);
  op.check_grid(prob.B);
  if (!prob.A.all_finite() || !prob.B.all_finite()) throw InvalidArgument("coefficients A and B must be finite");
  if (!(min_value(prob.A) > 0.0)) throw InvalidArgument("coefficient A must be positive everywhere");
  if (!(prob.p > 1.0)) throw InvalidArgument("exponent p must satisfy p > 1");
  if (!(prob.q > 1.0)) throw InvalidArgument("exponent q must satisfy q > 1");
  ProblemCheck chk;
  if (prob.mode == Nonlinearity::source) {
    if (min_value(prob.B) < 0.0) throw InvalidArgument("source mode requires B >= 0 everywhere");
    const double qcrit = op.params().two_sharp - 1.0;
    if (prob.q > qcrit + 1e-12)
      throw InvalidArgument("source mode requires q <= 2# - 1 = " + std::to_string(qcrit));
    if (std::abs(prob.q - qcrit) <= 1e-12) {
      chk.critical_exponent = true;
      chk.warnings.push_back("q = 2# - 1 is the critical exponent; compactness is borderline, best effort");
    }
  }
  return chk;
}

/// sup |P u - f(u)|
inline double equation_residual(const PaneitzOperator& op, const ProblemSpec& prob, const ScalarField& u) {
  ScalarField r = op.apply(u);
  for (std::size_t i = 0; i < u.size(); ++i) r[i] -= prob.f(i, u[i]);
  return sup_norm(r);
}

}  // namespace paneitz
