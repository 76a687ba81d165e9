#pragma once

// Semi-implicit stepping of u_t + P u = f(x, u):
//   (1/tau + P) u^{m+1} = u^m / tau + f(u^m).

#include <cmath>
#include <vector>

#include "paneitz/energy.hpp"
#include "paneitz/solver_report.hpp"

namespace paneitz {

struct FlowSample {
  double time = 0.0;
  double residual = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double energy = 0.0;
};

struct FlowOptions {
  double tau = 0.01;
  double t_max = 100.0;
  double residual_tolerance = 1e-8;
  int max_halvings = 20;
  /// Record a trajectory sample every this many accepted steps (plus first and last).
  int sample_every = 10;
  LinearSolveOptions linear{1e-13, 10000};
};

struct FlowReport {
  SolverReport solver;
  std::vector<FlowSample> trajectory;
  double final_time = 0.0;
  double final_tau = 0.0;
  int halvings = 0;
  bool steady = false;
};

inline FlowReport parabolic_flow(const PaneitzOperator& op, const ProblemSpec& prob, const ScalarField& u0,
                                 const FlowOptions& opts = {}) {
  validate_problem(op, prob);
  op.check_grid(u0);
  if (!(min_value(u0) > 0.0)) throw InvalidArgument("parabolic_flow: u0 must be positive");
  if (!(opts.tau > 0.0) || !(opts.t_max > 0.0)) throw InvalidArgument("parabolic_flow: need tau > 0 and Tmax > 0");

  FlowReport out;
  out.solver.method = "parabolic-flow";
  ScalarField u = u0;
  double t = 0.0;
  double tau = opts.tau;
  int accepted = 0;
  auto sample = [&](double res) {
    out.trajectory.push_back({t, res, min_value(u), max_value(u), energy(op, prob, 0.0, u)});
  };

  double res = equation_residual(op, prob, u);
  sample(res);
  while (res > opts.residual_tolerance && t < opts.t_max) {
    ScalarField rhs = prob.f(u);
    rhs.axpy(1.0 / tau, u);
    ScalarField next = op.solve_shifted(1.0 / tau, rhs, opts.linear);
    if (!(min_value(next) > 0.0) || !next.all_finite()) {
      if (++out.halvings > opts.max_halvings)
        throw ConvergenceError("parabolic_flow: positivity lost after " + std::to_string(opts.max_halvings) +
                                   " step halvings",
                               res, accepted);
      tau *= 0.5;
      continue;
    }
    out.solver.step_history.push_back(sup_distance(next, u));
    u = std::move(next);
    t += tau;
    ++accepted;
    res = equation_residual(op, prob, u);
    if (accepted % std::max(opts.sample_every, 1) == 0) sample(res);
  }
  if (out.trajectory.back().time != t) sample(res);

  out.steady = res <= opts.residual_tolerance;
  if (!out.steady)
    out.solver.warnings.push_back("Tmax reached before the residual fell below " +
                                  std::to_string(opts.residual_tolerance));
  out.final_time = t;
  out.final_tau = tau;
  out.solver.iterations = accepted;
  out.solver.residual = res;
  out.solver.converged = out.steady;
  out.solver.shift = 1.0 / tau;
  out.solver.lower_bound = min_value(u);
  out.solver.solution = std::move(u);
  return out;
}

}  // namespace paneitz
