#pragma once

#include <optional>
#include <string>
#include <vector>

#include "paneitz/geometry.hpp"

namespace paneitz {

/// s1 * e is a subsolution and s2 * e a supersolution.
struct Bracket {
  double s1 = 0.0;
  double s2 = 0.0;
  ScalarField e;

  ScalarField lower() const { return s1 * e; }
  ScalarField upper() const { return s2 * e; }
};

/// One entry of an epsilon schedule (continuation in B + eps, or the
/// regularization parameter of the mountain-pass functional).
struct EpsilonStage {
  double eps = 0.0;
  ScalarField solution;
  double min_u = 0.0;
  double max_u = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double energy = 0.0;
  /// Integral of A / (eps + u^2)^{(p+1)/2}; the uniform bound monitored while eps decreases.
  double singular_integral = 0.0;
  /// Integral of B u^{q+1} against its Sobolev bound ||B||_inf S^{-(q+1)/2} ||u||_psi^{q+1}.
  double source_integral = 0.0;
  double source_sobolev_bound = 0.0;
};

struct MountainPassInfo {
  double sobolev_constant = 0.0;
  double b_norm = 0.0;          ///< ||B||_{L^s}, s = 2#/(2# - q - 1) (s = inf at the critical exponent)
  double r0 = 0.0;              ///< radius of the rim sphere in the energy norm
  double rim = 0.0;             ///< lower bound of E_1 on the rim sphere
  double t0 = 0.0;
  double t2 = 0.0;
  double eps0 = 0.0;
  double energy_t0 = 0.0;       ///< E_eps0(t0 phi)
  double energy_t2 = 0.0;       ///< E_eps0(t2 phi)
  double energy_r0 = 0.0;       ///< E(r0 phi), unregularized
  double ray_max_energy = 0.0;  ///< sup over t in [t0, t2] of E(t phi), unregularized
  double pass_level = 0.0;      ///< c_eps0, energy of the critical point found at eps0
  double path_max_energy = 0.0; ///< max energy along the deformed path
  int path_sweeps = 0;
  bool cond_checked = false;
  bool rim_geometry = false;    ///< t0 < r0 < t2 and both endpoint energies below the rim
  bool level_in_bounds = false; ///< rim < pass_level < ray_max_energy
  bool critical_exponent = false;
  /// (q+1) E_eps(u) - <E_eps'(u), u> and the closed-form right side, at the eps0 critical point.
  double identity_lhs = 0.0;
  double identity_rhs = 0.0;
  double identity_norm_term = 0.0;
  /// min over x of (P^{-1}(B u^q))(x): positive value is a uniform lower bound for u.
  double green_lower_bound = 0.0;
  bool uniform_bound_ok = false;
  std::vector<double> path_energies;
};

struct SolverReport {
  ScalarField solution;
  double residual = 0.0;  ///< sup |P u - f(u)|
  int iterations = 0;
  bool converged = false;
  bool monotone_ok = true;
  bool confined_ok = true;
  double max_order_violation = 0.0;
  std::optional<Bracket> bracket;
  double shift = 0.0;                ///< last order-preserving shift used
  std::vector<double> step_history;  ///< sup |u^{k+1} - u^k| per iteration
  std::vector<double> shift_history;
  double lower_bound = 0.0;          ///< smallest min(u) observed along the run
  std::vector<EpsilonStage> stages;
  std::optional<MountainPassInfo> mountain_pass;
  std::vector<std::string> warnings;
  std::string method;
};

}  // namespace paneitz
