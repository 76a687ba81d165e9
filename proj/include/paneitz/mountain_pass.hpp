#pragma once

// eps-regularized mountain pass for P u = A/u^p + B u^q, B >= 0:
// path deformation between t0 phi and t2 phi, Newton refinement at eps0,
// continuation eps -> 0 and a final Newton polish of the true equation.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "paneitz/conditions.hpp"
#include "paneitz/energy.hpp"
#include "paneitz/krylov.hpp"
#include "paneitz/monotone.hpp"

namespace paneitz {

struct NewtonOptions {
  double tolerance = 1e-9;  ///< sup |E_eps'(u)|
  int max_iterations = 80;
  GmresOptions gmres{1e-11, 60, 3000};
};

struct NewtonResult {
  ScalarField u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton on E_eps'(u) = 0 with GMRES for the (possibly indefinite)
/// Hessian P + diag(h). Step halving on the L^2 norm of the gradient; at
/// eps = 0 trial points must stay positive.
inline NewtonResult newton_polish(const PaneitzOperator& op, const ProblemSpec& prob, double eps, ScalarField u,
                                  const NewtonOptions& opts = {}) {
  NewtonResult out;
  auto l2 = [](const ScalarField& g) { return std::sqrt(inner(g, g)); };
  ScalarField g = energy_gradient(op, prob, eps, u);
  double merit = l2(g);
  out.residual = sup_norm(g);
  const auto& sym = op.symbol();
  for (; out.iterations < opts.max_iterations; ++out.iterations) {
    if (out.residual <= opts.tolerance) break;
    const ScalarField h = energy_hessian_diagonal(prob, eps, u);
    const double c = std::abs(op.mean_multiplier() + integrate(h) / op.grid().volume()) + 1e-3;
    auto apply_h = [&](const ScalarField& x) {
      ScalarField y = op.apply(x);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += h[i] * x[i];
      return y;
    };
    auto prec = [&](const ScalarField& x) {
      return op.apply_multiplier(x, [&](std::size_t k) { return 1.0 / (sym[k] + c); });
    };
    ScalarField step = gmres(apply_h, prec, -1.0 * g, opts.gmres).solution;

    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt, s *= 0.5) {
      ScalarField trial = u;
      trial.axpy(s, step);
      if (eps == 0.0 && !(min_value(trial) > 0.0)) continue;
      ScalarField gt = energy_gradient(op, prob, eps, trial);
      const double mt = l2(gt);
      if (mt <= (1.0 - 1e-4 * s) * merit) {
        u = std::move(trial);
        g = std::move(gt);
        merit = mt;
        out.residual = sup_norm(g);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stagnated at roundoff
  }
  out.converged = out.residual <= opts.tolerance;
  out.u = std::move(u);
  return out;
}

struct MountainPassOptions {
  std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3, 1e-4};
  int path_nodes = 32;
  int max_sweeps = 400;
  /// Arc-length resampling period in sweeps. Longer periods let the polyline fold.
  int reparam_every = 1;
  /// Stop deforming once the Riesz gradient at the top node is this small (energy norm).
  double path_tolerance = 1e-5;
  double residual_tolerance = 1e-6;
  bool require_cond = true;
  std::optional<double> sobolev_constant;
  SobolevOptions sobolev{};
  NewtonOptions newton{};
};

namespace detail {

/// Golden-section refinement of a ray function on [a, b]; sign = +1 minimizes, -1 maximizes.
template <class Fn>
double golden_refine(Fn&& f, double a, double b, double sign) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = sign * f(c), fd = sign * f(d);
  for (int i = 0; i < 200 && (b - a) > 1e-12 * std::max(1.0, b); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = sign * f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = sign * f(d);
    }
  }
  return 0.5 * (a + b);
}

template <class Fn>
double scan_extremum(Fn&& f, double a, double b, int samples, double sign) {
  int best = 0;
  double fbest = sign * f(a);
  for (int i = 1; i <= samples; ++i) {
    const double v = sign * f(a + (b - a) * i / samples);
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  const double h = (b - a) / samples;
  const double lo = std::max(a, a + h * (best - 1));
  const double hi = std::min(b, a + h * (best + 1));
  return golden_refine(f, lo, hi, sign);
}

/// Resample a polyline of fields at equal arc length in the energy norm.
inline void reparametrize(const PaneitzOperator& op, std::vector<ScalarField>& path) {
  const std::size_t n = path.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) s[k] = s[k - 1] + energy_norm(op, path[k] - path[k - 1]);
  if (!(s.back() > 0.0)) return;
  std::vector<ScalarField> out;
  out.reserve(n);
  out.push_back(path.front());
  std::size_t seg = 1;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double target = s.back() * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 1 < n && s[seg] < target) ++seg;
    const double len = s[seg] - s[seg - 1];
    const double w = len > 0.0 ? (target - s[seg - 1]) / len : 0.0;
    ScalarField node = path[seg - 1];
    node *= 1.0 - w;
    node.axpy(w, path[seg]);
    out.push_back(std::move(node));
  }
  out.push_back(path.back());
  path = std::move(out);
}

inline EpsilonStage make_stage(const PaneitzOperator& op, const ProblemSpec& prob, const MountainPassInfo& mp,
                               double eps, const NewtonResult& nr) {
  EpsilonStage st;
  st.eps = eps;
  st.solution = nr.u;
  st.min_u = min_value(nr.u);
  st.max_u = max_value(nr.u);
  st.residual = nr.residual;
  st.iterations = nr.iterations;
  if (eps > 0.0 || st.min_u > 0.0) st.energy = energy(op, prob, eps, nr.u);
  st.singular_integral = integrate(zip(prob.A, nr.u, [&](double a, double x) {
    const double up = std::max(x, 0.0);
    return a * std::pow(eps + up * up, -(prob.p + 1.0) / 2.0);
  }));
  st.source_integral = power_integral(prob, nr.u);
  const double nrm = energy_norm(op, nr.u);
  st.source_sobolev_bound =
      sup_norm(prob.B) * std::pow(mp.sobolev_constant, -(prob.q + 1.0) / 2.0) * std::pow(nrm, prob.q + 1.0) *
      std::pow(op.grid().volume(), 1.0 - (prob.q + 1.0) / op.params().two_sharp);
  return st;
}

}  // namespace detail

inline SolverReport mountain_pass_solve(const PaneitzOperator& op, const ProblemSpec& prob,
                                        std::optional<ScalarField> phi = std::nullopt,
                                        const MountainPassOptions& opts = {}) {
  const ProblemCheck chk = validate_problem(op, prob);
  if (prob.mode != Nonlinearity::source) throw InvalidArgument("mountain_pass_solve needs source mode");
  if (opts.eps_schedule.empty()) throw InvalidArgument("mountain_pass_solve: empty eps schedule");
  for (std::size_t i = 0; i < opts.eps_schedule.size(); ++i)
    if (!(opts.eps_schedule[i] > 0.0) || (i > 0 && !(opts.eps_schedule[i] < opts.eps_schedule[i - 1])))
      throw InvalidArgument("mountain_pass_solve: eps schedule must be positive and strictly decreasing");

  if (prob.b_identically_zero()) {
    // P u = A/u^p: same problem in either sign.
    ProblemSpec abs = prob;
    abs.mode = Nonlinearity::absorption;
    SolverReport rep = monotone_solve(op, abs, find_sub_super(op, abs));
    rep.method = "monotone (B = 0 routed from source mode)";
    rep.warnings.push_back("B = 0: routed to the absorption solver");
    return rep;
  }
  if (!(op.coercivity_margin(0.0) > 0.0))
    throw CoercivityError("mountain_pass_solve: coercivity witness fails", op.coercivity_margin(0.0));

  SolverReport rep;
  rep.method = "mountain-pass";
  rep.warnings = chk.warnings;
  MountainPassInfo mp;
  mp.critical_exponent = chk.critical_exponent;
  mp.sobolev_constant = opts.sobolev_constant ? *opts.sobolev_constant : sobolev_constant(op, opts.sobolev);

  ScalarField phi_n = phi ? *phi : ScalarField(op.grid_ptr(), 1.0);
  op.check_grid(phi_n);
  if (!(min_value(phi_n) > 0.0)) throw InvalidArgument("mountain_pass_solve: phi must be positive");

  const ConditionReport cond = check_existence_cond(op, prob, phi_n, mp.sobolev_constant, true);
  mp.cond_checked = true;
  if (opts.require_cond && !cond.satisfied)
    throw ConditionNotMet("mountain_pass_solve: condition not satisfied (lhs " + std::to_string(cond.lhs) +
                              " >= C " + std::to_string(cond.rhs) + ")",
                          cond.margin);
  if (!cond.satisfied) rep.warnings.push_back("existence condition does not hold; searching anyway");

  phi_n *= 1.0 / energy_norm(op, phi_n);
  const RimGeometry rg = rim_geometry(op.params(), prob, mp.sobolev_constant);
  mp.b_norm = rg.b_norm;
  mp.r0 = rg.r0;
  mp.rim = rg.rim;
  const double eps0 = opts.eps_schedule.front();
  mp.eps0 = eps0;

  auto ray = [&](double eps) {
    return [&, eps](double t) { return energy(op, prob, eps, t * phi_n); };
  };
  auto ray0 = ray(eps0);

  // t0: lowest point of the ray inside the ball.
  mp.t0 = detail::scan_extremum(ray0, 0.0, mp.r0, 400, 1.0);
  mp.energy_t0 = ray0(mp.t0);
  // t2: first doubling past r0 that drops below both E(t0) and the rim.
  double t2 = 2.0 * mp.r0;
  int k = 0;
  while (!(ray0(t2) < std::min(mp.energy_t0, mp.rim))) {
    if (++k > 80) throw ConvergenceError("mountain_pass_solve: energy does not go to -inf along phi", 0.0, k);
    t2 *= 2.0;
  }
  mp.t2 = t2;
  mp.energy_t2 = ray0(t2);
  mp.energy_r0 = energy(op, prob, 0.0, mp.r0 * phi_n);
  {
    const double tmax = detail::scan_extremum(ray0, mp.t0, mp.t2, 800, -1.0);
    mp.ray_max_energy = ray0(tmax);
  }
  mp.rim_geometry = mp.t0 < mp.r0 && mp.r0 < mp.t2 && mp.energy_t0 < mp.rim && mp.energy_t2 < mp.rim;
  if (!mp.rim_geometry) rep.warnings.push_back("rim geometry t0 < r0 < t2 with endpoints below the rim not met");

  // Path deformation: steepest descent of the highest node with the P-Riesz gradient.
  const int nodes = std::max(opts.path_nodes, 3);
  std::vector<ScalarField> path;
  for (int i = 0; i < nodes; ++i) {
    const double t = mp.t0 + (mp.t2 - mp.t0) * i / (nodes - 1.0);
    path.push_back(t * phi_n);
  }
  std::vector<double> E(nodes);
  for (int i = 0; i < nodes; ++i) E[i] = energy(op, prob, eps0, path[i]);
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    if (sweep > 0 && sweep % opts.reparam_every == 0) {
      detail::reparametrize(op, path);
      for (int i = 0; i < nodes; ++i) E[i] = energy(op, prob, eps0, path[i]);
    }
    const int top = static_cast<int>(std::max_element(E.begin() + 1, E.end() - 1) - E.begin());
    const ScalarField g = energy_gradient(op, prob, eps0, path[top]);
    const ScalarField G = op.solve_shifted(0.0, g);
    const double slope = inner(g, G);
    if (std::sqrt(std::max(slope, 0.0)) <= opts.path_tolerance * std::max(1.0, energy_norm(op, path[top]))) break;
    // cap the move at the mean node spacing so the polyline stays a path
    const double spacing = 0.5 * (energy_norm(op, path[top] - path[top - 1]) + energy_norm(op, path[top + 1] - path[top]));
    double s = std::min(1.0, spacing / std::sqrt(std::max(slope, 1e-300)));
    bool moved = false;
    for (int bt = 0; bt < 50; ++bt, s *= 0.5) {
      ScalarField trial = path[top];
      trial.axpy(-s, G);
      const double et = energy(op, prob, eps0, trial);
      if (et <= E[top] - 1e-4 * s * slope) {
        path[top] = std::move(trial);
        E[top] = et;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  mp.path_sweeps = sweep;
  mp.path_energies = E;
  const int top = static_cast<int>(std::max_element(E.begin() + 1, E.end() - 1) - E.begin());
  mp.path_max_energy = E[top];

  // Critical point at eps0 from the top of the path.
  NewtonResult nr = newton_polish(op, prob, eps0, path[top], opts.newton);
  if (!nr.converged)
    throw ConvergenceError("mountain_pass_solve: descent stagnated near the pass at eps0", nr.residual, nr.iterations);
  rep.iterations += nr.iterations;
  mp.pass_level = energy(op, prob, eps0, nr.u);
  {
    const double slack = 1e-9 * std::max(1.0, std::abs(mp.ray_max_energy));
    mp.level_in_bounds = mp.rim < mp.pass_level && mp.pass_level <= mp.ray_max_energy + slack;
  }
  {
    const ScalarField& u = nr.u;
    const double q = prob.q, p = prob.p;
    const ScalarField g = energy_gradient(op, prob, eps0, u);
    mp.identity_lhs = (q + 1.0) * mp.pass_level - inner(g, u);
    const double nrm2 = inner(u, op.apply(u));
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double up = std::max(u[i], 0.0);
      const double s = eps0 + up * up;
      a1 += prob.A[i] * std::pow(s, -(p - 1.0) / 2.0);
      a2 += prob.A[i] * std::pow(s, -(p + 1.0) / 2.0);
    }
    a1 *= op.grid().cell_weight();
    a2 *= op.grid().cell_weight();
    mp.identity_norm_term = 0.5 * (q - 1.0) * nrm2;
    mp.identity_rhs = mp.identity_norm_term + ((q + 1.0) / (p - 1.0) + 1.0) * a1 - eps0 * a2;
  }
  rep.stages.push_back(detail::make_stage(op, prob, mp, eps0, nr));

  ScalarField u = nr.u;
  for (std::size_t i = 1; i < opts.eps_schedule.size(); ++i) {
    const double eps = opts.eps_schedule[i];
    NewtonResult ni = newton_polish(op, prob, eps, u, opts.newton);
    rep.iterations += ni.iterations;
    if (!ni.converged)
      throw ConvergenceError("mountain_pass_solve: Newton stagnated at eps = " + std::to_string(eps), ni.residual,
                             rep.iterations);
    rep.stages.push_back(detail::make_stage(op, prob, mp, eps, ni));
    const auto& prev = rep.stages[rep.stages.size() - 2];
    if (rep.stages.back().singular_integral > 10.0 * prev.singular_integral)
      rep.warnings.push_back("singular integral grows sharply at eps = " + std::to_string(eps));
    if (!(rep.stages.back().min_u > 1e-8)) {
      const ScalarField green = op.solve_shifted(0.0, zip(prob.B, ni.u, [&](double b, double x) {
        return b * std::pow(std::max(x, 0.0), prob.q);
      }));
      throw ConvergenceError("mountain_pass_solve: lower bound collapsed (min u = " +
                                 std::to_string(rep.stages.back().min_u) + ", min P^{-1}(B u^q) = " +
                                 std::to_string(min_value(green)) + ")",
                             ni.residual, rep.iterations);
    }
    u = std::move(ni.u);
  }
  if (!(min_value(u) > 0.0)) throw ConvergenceError("mountain_pass_solve: last eps stage is not positive", 0.0, 0);

  NewtonResult fin = newton_polish(op, prob, 0.0, u, opts.newton);
  rep.iterations += fin.iterations;
  rep.residual = equation_residual(op, prob, fin.u);
  if (!(rep.residual <= opts.residual_tolerance) || !(min_value(fin.u) > 0.0))
    throw ConvergenceError("mountain_pass_solve: final polish did not reach the residual tolerance", rep.residual,
                           rep.iterations);
  {
    const ScalarField green = op.solve_shifted(0.0, zip(prob.B, fin.u, [&](double b, double x) {
      return b * std::pow(x, prob.q);
    }));
    mp.green_lower_bound = min_value(green);
    mp.uniform_bound_ok =
        mp.green_lower_bound > 0.0 && min_value(fin.u) >= mp.green_lower_bound - 1e-8 * max_value(fin.u);
  }
  rep.stages.push_back(detail::make_stage(op, prob, mp, 0.0, fin));
  rep.lower_bound = fin.u.empty() ? 0.0 : min_value(fin.u);
  for (const auto& st : rep.stages) rep.lower_bound = std::min(rep.lower_bound, st.min_u);
  if (mp.critical_exponent) {
    const auto& st = rep.stages.back();
    if (st.source_integral > st.source_sobolev_bound * (1.0 + 1e-8))
      rep.warnings.push_back("Sobolev bound on int B u^{q+1} violated (discrete S estimate too large)");
  }
  rep.converged = true;
  rep.solution = std::move(fin.u);
  rep.mountain_pass = std::move(mp);
  return rep;
}

struct SecondSolutionReport {
  std::optional<SolverReport> solver;
  bool distinct = false;
  bool ordered = false;  ///< u_{B-eps} <= u_{B+eps} pointwise on the computed pair
  double distance = 0.0; ///< sup |u~ - u_B|
  std::string bracket;   ///< which sub/super pair was iterated
  std::vector<std::string> notes;
};

/// Second positive solution: monotone iteration between the solutions for
/// B - eps and B + eps when those are ordered. The mountain-pass branch
/// decreases in B, so when the order fails the iteration falls back to the
/// bracket [s1 e, u_{B+eps}] (or [s1 e, u_B] if B + eps has no solution).
inline SecondSolutionReport second_solution_attempt(const PaneitzOperator& op, const ProblemSpec& prob,
                                                    const ScalarField& u_b, double eps_pert,
                                                    const MountainPassOptions& mp_opts = {}) {
  validate_problem(op, prob);
  if (prob.mode != Nonlinearity::source) throw InvalidArgument("second_solution_attempt needs source mode");
  if (!(eps_pert >= 0.0)) throw InvalidArgument("second_solution_attempt: eps_pert must be >= 0");
  op.check_grid(u_b);
  SecondSolutionReport out;
  if (eps_pert == 0.0) {
    SolverReport r;
    r.solution = u_b;
    r.residual = equation_residual(op, prob, u_b);
    r.converged = true;
    r.method = "degenerate bracket";
    out.solver = std::move(r);
    out.ordered = true;
    out.bracket = "[u_B, u_B]";
    out.notes.push_back("eps_pert = 0: bracket collapses to u_B");
    return out;
  }

  auto shifted = [&](double d) {
    ProblemSpec p = prob;
    p.B = map(prob.B, [d](double b) { return std::max(b + d, 0.0); });
    return p;
  };
  std::optional<ScalarField> u_minus, u_plus;
  try {
    u_minus = mountain_pass_solve(op, shifted(-eps_pert), std::nullopt, mp_opts).solution;
  } catch (const Error& e) {
    out.notes.push_back(std::string("B - eps solve failed: ") + e.what());
  }
  try {
    u_plus = mountain_pass_solve(op, shifted(eps_pert), std::nullopt, mp_opts).solution;
  } catch (const Error& e) {
    out.notes.push_back(std::string("B + eps solve failed: ") + e.what());
  }

  ScalarField lower, upper;
  if (u_minus && u_plus) {
    out.ordered = true;
    for (std::size_t i = 0; i < u_b.size(); ++i)
      if ((*u_minus)[i] > (*u_plus)[i]) out.ordered = false;
  }
  if (out.ordered) {
    lower = *u_minus;
    upper = *u_plus;
    out.bracket = "[u_{B-eps}, u_{B+eps}]";
  } else {
    if (u_minus && u_plus) out.notes.push_back("u_{B-eps} <= u_{B+eps} fails on the computed branch");
    upper = u_plus ? *u_plus : u_b;
    out.bracket = u_plus ? "[s1 e, u_{B+eps}]" : "[s1 e, u_B]";
    // only the subsolution half of find_sub_super: near the fold no constant supersolution exists
    const ScalarField e(op.grid_ptr(), 1.0);
    const ScalarField pe = op.apply(e);
    double s1 = 1.0;
    for (int k = 0; k < 200 && (!detail::is_subsolution(prob, pe, e, s1) || s1 > min_value(upper)); ++k) s1 *= 0.5;
    lower = s1 * e;
  }
  try {
    SolverReport r = monotone_iterate(op, prob, lower, upper);
    out.distance = sup_distance(r.solution, u_b);
    out.distinct = out.distance > 1e-4;
    out.solver = std::move(r);
  } catch (const Error& e) {
    out.notes.push_back(std::string("monotone step failed: ") + e.what());
  }
  return out;
}

}  // namespace paneitz
