#pragma once

// E_eps(u) = 1/2 <u, P u> + 1/(p-1) int A (eps + (u+)^2)^{-(p-1)/2} -+ 1/(q+1) int B (u+)^{q+1}
// with the minus sign in source mode and plus in absorption mode, so that the
// critical points at eps = 0 solve P u = A/u^p +- B u^q.

#include <cmath>

#include "paneitz/problem.hpp"

namespace paneitz {

namespace detail {

inline void check_energy_domain(double eps, const ScalarField& u, const char* who) {
  if (!(eps >= 0.0)) throw InvalidArgument(std::string(who) + ": eps must be >= 0");
  if (eps == 0.0 && !(min_value(u) > 0.0))
    throw InvalidArgument(std::string(who) + ": eps = 0 needs u > 0 everywhere");
}

}  // namespace detail

/// Singular part only: 1/(p-1) int A (eps + (u+)^2)^{-(p-1)/2}.
inline double singular_energy(const ProblemSpec& prob, double eps, const ScalarField& u) {
  const ScalarField s = zip(prob.A, u, [&](double a, double x) {
    const double up = std::max(x, 0.0);
    return a * std::pow(eps + up * up, -(prob.p - 1.0) / 2.0);
  });
  return integrate(s) / (prob.p - 1.0);
}

/// int B (u+)^{q+1}
inline double power_integral(const ProblemSpec& prob, const ScalarField& u) {
  return integrate(zip(prob.B, u, [&](double b, double x) { return b * std::pow(std::max(x, 0.0), prob.q + 1.0); }));
}

inline double energy(const PaneitzOperator& op, const ProblemSpec& prob, double eps, const ScalarField& u) {
  detail::check_energy_domain(eps, u, "energy");
  op.check_grid(u);
  const double quad = 0.5 * inner(u, op.apply(u));
  return quad + singular_energy(prob, eps, u) - prob.b_sign() * power_integral(prob, u) / (prob.q + 1.0);
}

/// L^2 gradient density of E_eps: P u - A u+ (eps + u+^2)^{-(p+1)/2} -+ B (u+)^q.
inline ScalarField energy_gradient(const PaneitzOperator& op, const ProblemSpec& prob, double eps,
                                   const ScalarField& u) {
  detail::check_energy_domain(eps, u, "energy_gradient");
  ScalarField g = op.apply(u);
  const double sgn = prob.b_sign();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double up = std::max(u[i], 0.0);
    if (up > 0.0 || eps > 0.0) g[i] -= prob.A[i] * up * std::pow(eps + up * up, -(prob.p + 1.0) / 2.0);
    g[i] -= sgn * prob.B[i] * std::pow(up, prob.q);
  }
  return g;
}

/// Diagonal of the second variation beyond P: E_eps''(u) = P + diag(h).
inline ScalarField energy_hessian_diagonal(const ProblemSpec& prob, double eps, const ScalarField& u) {
  ScalarField h(u.grid_ptr(), 0.0);
  const double sgn = prob.b_sign();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double up = std::max(u[i], 0.0);
    if (up <= 0.0) continue;
    const double s = eps + up * up;
    h[i] = prob.A[i] * std::pow(s, -(prob.p + 3.0) / 2.0) * (prob.p * up * up - eps) -
           sgn * prob.q * prob.B[i] * std::pow(up, prob.q - 1.0);
  }
  return h;
}

/// sup |E_eps'(u)| as a field residual (equals the equation residual at eps = 0).
inline double gradient_residual(const PaneitzOperator& op, const ProblemSpec& prob, double eps, const ScalarField& u) {
  return sup_norm(energy_gradient(op, prob, eps, u));
}

}  // namespace paneitz
