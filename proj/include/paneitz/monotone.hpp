#pragma once

// Sub/supersolution bracketing and the order-preserving monotone iteration
//   (P + lambda) u^{k+1} = f(u^k) + lambda u^k,
// plus continuation in B + eps for B >= 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "paneitz/problem.hpp"
#include "paneitz/solver_report.hpp"

namespace paneitz {

/// Bound on -df/du over [delta, M]: p max(A)/delta^{p+1} + q max|B| M^{q-1}.
inline double lipschitz_shift(const ProblemSpec& prob, double delta, double M) {
  if (!(delta > 0.0) || !(M >= delta)) throw InvalidArgument("lipschitz_shift: need 0 < delta <= M");
  const double amax = max_value(prob.A);
  const double bmax = sup_norm(prob.B);
  return prob.p * amax / std::pow(delta, prob.p + 1.0) + prob.q * bmax * std::pow(M, prob.q - 1.0);
}

namespace detail {

inline bool is_subsolution(const ProblemSpec& prob, const ScalarField& pe, const ScalarField& e, double s) {
  for (std::size_t i = 0; i < e.size(); ++i)
    if (!(s * pe[i] <= prob.f(i, s * e[i]))) return false;
  return true;
}

inline bool is_supersolution(const ProblemSpec& prob, const ScalarField& pe, const ScalarField& e, double s) {
  for (std::size_t i = 0; i < e.size(); ++i)
    if (!(s * pe[i] >= prob.f(i, s * e[i]))) return false;
  return true;
}

}  // namespace detail

/// s1 by halving from 1 and s2 by doubling from 1 (at most 200 steps each),
/// both verified pointwise against P(s e) = s P e.
inline Bracket find_sub_super(const PaneitzOperator& op, const ProblemSpec& prob,
                              std::optional<ScalarField> e = std::nullopt) {
  validate_problem(op, prob);
  Bracket br;
  br.e = e ? *e : ScalarField(op.grid_ptr(), 1.0);
  op.check_grid(br.e);
  if (!(min_value(br.e) > 0.0)) throw InvalidArgument("find_sub_super: e must be positive");
  const ScalarField pe = op.apply(br.e);

  double s1 = 1.0;
  int k = 0;
  while (!detail::is_subsolution(prob, pe, br.e, s1)) {
    if (++k > 200 || !(s1 > 0.0)) throw NoBracket("find_sub_super: subsolution scale underflowed");
    s1 *= 0.5;
  }
  double s2 = 1.0;
  k = 0;
  while (!detail::is_supersolution(prob, pe, br.e, s2)) {
    if (++k > 200 || !std::isfinite(s2)) {
      std::string why = "find_sub_super: no supersolution s*e within 200 doublings";
      if (prob.b_identically_zero() && op.min_multiplier() <= 0.0)
        why += " (B = 0 and W <= 0 somewhere: the linear part cannot dominate A/u^p)";
      else if (prob.mode == Nonlinearity::source)
        why += " (source term outgrows the linear part; lambda_1 may be too small)";
      throw NoBracket(why);
    }
    s2 *= 2.0;
  }
  br.s1 = s1;
  br.s2 = std::max(s1, s2);
  return br;
}

struct MonotoneOptions {
  double step_tolerance = 1e-10;
  double residual_tolerance = 1e-8;
  int max_iterations = 100000;
  /// Pointwise slack (times max(1, sup|u|)) for the order checks.
  double order_slack = 1e-12;
  bool abort_on_violation = true;
  /// Iterate downward from the supersolution instead of upward from the subsolution.
  bool downward = false;
  /// Starting field; must lie in [lower, upper]. Defaults to the lower (upper when downward) end.
  std::optional<ScalarField> start;
  LinearSolveOptions linear{1e-14, 10000};
};

/// Monotone iteration between two ordered fields lower <= upper.
inline SolverReport monotone_iterate(const PaneitzOperator& op, const ProblemSpec& prob, const ScalarField& lower,
                                     const ScalarField& upper, const MonotoneOptions& opts = {}) {
  validate_problem(op, prob);
  if (!(min_value(lower) > 0.0)) throw InvalidArgument("monotone_iterate: lower bound must be positive");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i]) throw InvalidArgument("monotone_iterate: lower bound exceeds upper bound");

  SolverReport rep;
  rep.method = opts.downward ? "monotone-down" : "monotone-up";
  ScalarField u = opts.start ? *opts.start : (opts.downward ? upper : lower);
  const double lo_min = min_value(lower);
  const double up_max = max_value(upper);
  const double slack = opts.order_slack * std::max(1.0, up_max);
  rep.lower_bound = min_value(u);

  for (int k = 0; k < opts.max_iterations; ++k) {
    const double delta = opts.downward ? lo_min : std::max(lo_min, min_value(u));
    const double M = opts.downward ? std::min(up_max, max_value(u)) : up_max;
    const double lambda = lipschitz_shift(prob, delta, std::max(M, delta));
    rep.shift = lambda;
    rep.shift_history.push_back(lambda);

    ScalarField rhs = prob.f(u);
    rhs.axpy(lambda, u);
    ScalarField next = op.solve_shifted(lambda, rhs, opts.linear);

    double violation = 0.0;
    double escape = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = opts.downward ? u[i] - next[i] : next[i] - u[i];
      violation = std::max(violation, -d);
      escape = std::max({escape, lower[i] - next[i], next[i] - upper[i]});
    }
    if (violation > slack) {
      rep.monotone_ok = false;
      rep.max_order_violation = std::max(rep.max_order_violation, violation);
      if (opts.abort_on_violation)
        throw OrderViolation("monotone iteration lost monotonicity at iteration " + std::to_string(k + 1) +
                                 " (discrete maximum principle failure, magnitude " + std::to_string(violation) + ")",
                             k + 1, violation);
    }
    if (escape > slack) {
      rep.confined_ok = false;
      rep.max_order_violation = std::max(rep.max_order_violation, escape);
      if (opts.abort_on_violation)
        throw OrderViolation("monotone iterate left the bracket at iteration " + std::to_string(k + 1), k + 1, escape);
    }

    const double step = sup_distance(next, u);
    u = std::move(next);
    rep.step_history.push_back(step);
    rep.iterations = k + 1;
    rep.lower_bound = std::min(rep.lower_bound, min_value(u));
    if (step <= opts.step_tolerance) {
      rep.residual = equation_residual(op, prob, u);
      if (rep.residual <= opts.residual_tolerance) {
        rep.converged = true;
        break;
      }
    }
  }
  if (!rep.converged) {
    rep.residual = equation_residual(op, prob, u);
    throw ConvergenceError("monotone iteration hit the iteration cap", rep.residual, rep.iterations);
  }
  rep.solution = std::move(u);
  return rep;
}

inline SolverReport monotone_solve(const PaneitzOperator& op, const ProblemSpec& prob, const Bracket& bracket,
                                   const MonotoneOptions& opts = {}) {
  SolverReport rep = monotone_iterate(op, prob, bracket.lower(), bracket.upper(), opts);
  rep.bracket = bracket;
  return rep;
}

/// Solves with B + eps along a decreasing schedule, warm-starting each stage
/// from the previous solution (a subsolution for the smaller eps). The
/// reported solution is the last stage when it has eps = 0, otherwise the
/// linear extrapolation to eps = 0 of the last two stages.
inline SolverReport epsilon_continuation(const PaneitzOperator& op, const ProblemSpec& prob,
                                         const std::vector<double>& schedule, const MonotoneOptions& opts = {}) {
  validate_problem(op, prob);
  if (prob.mode != Nonlinearity::absorption) throw InvalidArgument("epsilon_continuation needs absorption mode");
  if (min_value(prob.B) < 0.0) throw InvalidArgument("epsilon_continuation needs B >= 0");
  if (schedule.empty()) throw InvalidArgument("epsilon_continuation: empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] >= 0.0)) throw InvalidArgument("epsilon_continuation: eps must be >= 0");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw InvalidArgument("epsilon_continuation: schedule must be strictly decreasing");
  }

  SolverReport rep;
  rep.method = "epsilon-continuation";
  std::optional<ScalarField> prev;
  double delta = std::numeric_limits<double>::infinity();
  for (double eps : schedule) {
    ProblemSpec pe = prob;
    pe.B = map(prob.B, [eps](double b) { return b + eps; });
    Bracket br = find_sub_super(op, pe);
    MonotoneOptions o = opts;
    o.downward = false;
    ScalarField lower = br.lower();
    if (prev) {
      // Previous stage solves P u = A/u^p - (B + eps_prev) u^q, hence is a
      // subsolution for the smaller eps.
      lower = *prev;
      o.start = *prev;
    }
    SolverReport stage = monotone_iterate(op, pe, lower, br.upper(), o);
    rep.iterations += stage.iterations;
    rep.monotone_ok = rep.monotone_ok && stage.monotone_ok;
    rep.confined_ok = rep.confined_ok && stage.confined_ok;
    rep.bracket = br;
    EpsilonStage st;
    st.eps = eps;
    st.solution = stage.solution;
    st.min_u = min_value(stage.solution);
    st.max_u = max_value(stage.solution);
    st.residual = stage.residual;
    st.iterations = stage.iterations;
    delta = std::min(delta, st.min_u);
    if (!(st.min_u > 1e-12))
      throw ConvergenceError("epsilon_continuation: lower bound degenerated (min u_eps -> 0) at eps = " +
                                 std::to_string(eps),
                             st.residual, rep.iterations);
    prev = stage.solution;
    rep.stages.push_back(std::move(st));
  }
  rep.lower_bound = delta;

  const auto& last = rep.stages.back();
  if (last.eps == 0.0 || rep.stages.size() < 2) {
    rep.solution = last.solution;
  } else {
    const auto& prev_stage = rep.stages[rep.stages.size() - 2];
    const double w = last.eps / (prev_stage.eps - last.eps);
    rep.solution = last.solution;
    for (std::size_t i = 0; i < rep.solution.size(); ++i)
      rep.solution[i] += w * (last.solution[i] - prev_stage.solution[i]);
  }
  // Cauchy check: successive sup-distances must shrink.
  for (std::size_t i = 2; i < rep.stages.size(); ++i) {
    const double d_new = sup_distance(rep.stages[i].solution, rep.stages[i - 1].solution);
    const double d_old = sup_distance(rep.stages[i - 1].solution, rep.stages[i - 2].solution);
    if (d_new > d_old * (1.0 + 1e-9) + 1e-14)
      rep.warnings.push_back("epsilon stages are not Cauchy at eps = " + std::to_string(rep.stages[i].eps));
  }
  rep.residual = equation_residual(op, prob, rep.solution);
  rep.converged = true;
  return rep;
}

}  // namespace paneitz
