#pragma once

// Empirical threshold lambda* for P u = 1/u^p + lambda u^q by bisection on
// mountain-pass feasibility, alongside the two certified bounds.

#include <algorithm>
#include <cmath>
#include <string>

#include "paneitz/conditions.hpp"
#include "paneitz/mountain_pass.hpp"

namespace paneitz {

struct LambdaStarOptions {
  double tolerance = 1e-3;
  int max_probes = 60;
  /// Uniform probes on [0, hi] before bisecting; 0 disables the scan.
  int prescan = 0;
  MountainPassOptions mountain_pass{};
};

namespace detail {

inline LambdaStarResult::Probe probe_lambda(const PaneitzOperator& op, double p, double q, double lambda,
                                            const MountainPassOptions& mp) {
  const auto grid = op.grid_ptr();
  ProblemSpec prob{ScalarField(grid, 1.0), ScalarField(grid, lambda), p, q, Nonlinearity::source};
  LambdaStarResult::Probe pr;
  pr.lambda = lambda;
  try {
    SolverReport r = mountain_pass_solve(op, prob, std::nullopt, mp);
    pr.feasible = r.converged && min_value(r.solution) > 0.0;
    pr.residual = r.residual;
    pr.note = r.method;
  } catch (const Error& e) {
    pr.feasible = false;
    pr.note = e.what();
  }
  return pr;
}

}  // namespace detail

inline LambdaStarResult lambda_star_bisect(const PaneitzOperator& op, double p, double q, double S,
                                           const LambdaStarOptions& opts = {}) {
  if (!(opts.tolerance > 0.0)) throw InvalidArgument("lambda_star_bisect: tolerance must be > 0");
  LambdaStarResult out = lambda_star_bracket(op, p, q, S);
  out.tolerance = opts.tolerance;
  MountainPassOptions mp = opts.mountain_pass;
  mp.require_cond = false;
  mp.sobolev_constant = S;

  double lo = 0.0;
  double hi = out.upper > 0.0 ? 2.0 * out.upper : 1.0;
  auto probe = [&](double lam) {
    out.probes.push_back(detail::probe_lambda(op, p, q, lam, mp));
    return out.probes.back().feasible;
  };

  if (!probe(lo)) {
    out.anomalies.push_back("lambda = 0 is infeasible");
    return out;
  }
  // grow hi until infeasible (the certified upper bound should make this a no-op)
  int grow = 0;
  while (probe(hi)) {
    out.anomalies.push_back("feasible at lambda = " + std::to_string(hi) + " above the search end");
    if (++grow > 10) return out;
    lo = hi;
    hi *= 2.0;
  }
  if (opts.prescan > 0) {
    bool seen_infeasible = false;
    double first_bad = hi;
    for (int i = 1; i < opts.prescan; ++i) {
      const double lam = lo + (hi - lo) * i / opts.prescan;
      const bool ok = probe(lam);
      if (!ok && !seen_infeasible) {
        seen_infeasible = true;
        first_bad = lam;
      } else if (ok && seen_infeasible) {
        out.anomalies.push_back("non-monotone feasibility: feasible at " + std::to_string(lam) +
                                " after infeasible at " + std::to_string(first_bad));
      }
    }
    // bisect inside the first transition of the scan
    for (const auto& pr : out.probes)
      if (pr.feasible && pr.lambda < first_bad) lo = std::max(lo, pr.lambda);
    hi = first_bad;
  }
  for (int k = 0; hi - lo > opts.tolerance && k < opts.max_probes; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid))
      lo = mid;
    else
      hi = mid;
  }
  // a feasible probe above an infeasible one contradicts a single threshold
  for (const auto& a : out.probes) {
    auto it = std::find_if(out.probes.begin(), out.probes.end(),
                           [&](const auto& b) { return a.feasible && !b.feasible && a.lambda > b.lambda; });
    if (it != out.probes.end()) {
      out.anomalies.push_back("feasible at " + std::to_string(a.lambda) + " but infeasible at " +
                              std::to_string(it->lambda));
      break;
    }
  }
  out.interval_lo = lo;
  out.interval_hi = hi;
  // the largest verified-feasible lambda; the midpoint can overshoot a sharp upper bound
  out.empirical = lo;
  if (*out.empirical < out.lower - opts.tolerance)
    out.anomalies.push_back("empirical threshold below the certified lower bound");
  if (out.upper > 0.0 && *out.empirical > out.upper + opts.tolerance)
    out.anomalies.push_back("empirical threshold above the certified upper bound");
  return out;
}

}  // namespace paneitz
