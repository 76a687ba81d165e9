#pragma once

// Principal eigenpair, discrete Sobolev constant, sign of the conformal
// invariant, energy norm and Green's-function positivity diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "paneitz/operator.hpp"

namespace paneitz {

struct EigenPair {
  double lambda1 = 0.0;
  ScalarField phi1;  ///< normalized to max(phi1) = 1
  double residual = 0.0;  ///< sup |P phi1 - lambda1 phi1|
  int iterations = 0;
  double shift = 0.0;
  /// min(phi1) > 0. A sign-changing principal vector is reported here rather
  /// than repaired.
  bool positive = false;
};

struct EigenOptions {
  double residual_tolerance = 1e-11;
  int max_iterations = 20000;
};

namespace detail {

inline double rayleigh(const PaneitzOperator& op, const ScalarField& u) {
  return inner(u, op.apply(u)) / inner(u, u);
}

/// Smallest shift s >= 0 making the coercivity witness of P + s hold with room.
inline double coercive_shift(const PaneitzOperator& op) {
  const double scale = std::max({1.0, std::abs(op.params().beta), std::abs(op.max_multiplier())});
  const double margin = op.coercivity_margin(0.0);
  return margin > 1e-3 * scale ? 0.0 : -margin + scale;
}

}  // namespace detail

/// Inverse power iteration on P + shift.
inline EigenPair principal_eigenpair(const PaneitzOperator& op, const EigenOptions& opts = {}) {
  EigenPair out;
  out.shift = detail::coercive_shift(op);
  const double scale = std::max({1.0, std::abs(op.params().beta), std::abs(op.max_multiplier()),
                                 std::abs(op.min_multiplier())});
  ScalarField v(op.grid_ptr(), 1.0);
  double lambda = detail::rayleigh(op, v);
  double res = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    ScalarField pv = op.apply(v);
    lambda = inner(v, pv) / inner(v, v);
    pv.axpy(-lambda, v);
    res = sup_norm(pv) / sup_norm(v);
    if (res <= opts.residual_tolerance * scale) break;
    v = op.solve_shifted(out.shift, v);
    v *= 1.0 / std::sqrt(inner(v, v));
  }
  if (res > 1e-8 * scale)
    throw ConvergenceError("principal_eigenpair: inverse iteration stagnated", res, it);

  // Fix the sign by the largest-magnitude entry, then scale to max = 1.
  std::size_t arg = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  v *= 1.0 / v[arg];
  ScalarField r = op.apply(v);
  r.axpy(-lambda, v);
  out.lambda1 = lambda;
  out.residual = sup_norm(r);
  out.iterations = it;
  out.positive = min_value(v) > 0.0;
  out.phi1 = std::move(v);
  return out;
}

/// Sign of lambda_1, with zero declared when |lambda_1| <= 1e-9 * max(|beta|, 1).
inline int invariant_sign(const PaneitzOperator& op) {
  const EigenPair e = principal_eigenpair(op);
  const double tol = 1e-9 * std::max(std::abs(op.params().beta), 1.0);
  if (std::abs(e.lambda1) <= tol) return 0;
  return e.lambda1 > 0.0 ? 1 : -1;
}

/// ||u||_psi = sqrt(<u, P u>).
inline double energy_norm(const PaneitzOperator& op, const ScalarField& u) {
  const double q = inner(u, op.apply(u));
  if (q < 0.0) {
    const double noise = 1e-13 * std::max(1.0, std::abs(op.params().beta)) * inner(u, u);
    if (q < -noise)
      throw InvalidArgument("energy_norm: negative quadratic form " + std::to_string(q) +
                            " (coercivity violated)");
    return 0.0;
  }
  return std::sqrt(q);
}

/// ||u||_psi^2 / ||u||_{L^{2#}}^2
inline double sobolev_quotient(const PaneitzOperator& op, const ScalarField& u) {
  const double r = lp_norm(u, op.params().two_sharp);
  return inner(u, op.apply(u)) / (r * r);
}

struct SobolevOptions {
  std::uint64_t seed = 0;
  int random_starts = 4;
  int max_iterations = 20000;
  /// Stop when <g, P^{-1} g> <= tolerance * J.
  double tolerance = 1e-15;
};

struct SobolevStart {
  std::string label;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SobolevResult {
  double value = 0.0;
  ScalarField minimizer;  ///< normalized to unit L^{2#} norm
  std::vector<SobolevStart> starts;
  std::string grid_signature;
};

namespace detail {

inline ScalarField normalize_lr(ScalarField u, double r) {
  u *= 1.0 / lp_norm(u, r);
  return u;
}

struct DescentOutcome {
  ScalarField u;
  double value;
  int iterations;
  bool converged;
};

/// Projected descent of J on the unit L^{2#} sphere with the P-Riesz gradient
/// and Armijo backtracking from unit step.
inline DescentOutcome sobolev_descent(const PaneitzOperator& op, ScalarField u, const SobolevOptions& opts) {
  const double r = op.params().two_sharp;
  u = normalize_lr(std::move(u), r);
  ScalarField pu = op.apply(u);
  double J = inner(u, pu);
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    ScalarField nl = map(u, [&](double x) { return std::pow(std::abs(x), r - 2.0) * x; });
    ScalarField g = pu;
    g.axpy(-J, nl);
    ScalarField G = op.solve_shifted(0.0, g);
    const double slope = inner(g, G);
    if (!(slope > opts.tolerance * std::abs(J))) {
      converged = true;
      break;
    }
    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, s *= 0.5) {
      ScalarField trial = u;
      trial.axpy(-s, G);
      const double nrm = lp_norm(trial, r);
      if (!(nrm > 0.0)) continue;
      trial *= 1.0 / nrm;
      ScalarField pt = op.apply(trial);
      const double Jt = inner(trial, pt);
      if (Jt <= J - 1e-4 * s * 2.0 * slope) {
        u = std::move(trial);
        pu = std::move(pt);
        J = Jt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease representable in floating point: stationary to roundoff.
      converged = true;
      break;
    }
  }
  return {std::move(u), J, it, converged};
}

}  // namespace detail

/// Multi-start estimate of S_psi = inf ||u||_psi^2 / ||u||_{L^{2#}}^2. The
/// value is an upper bound on the discrete infimum; deterministic given the seed.
inline SobolevResult sobolev_minimize(const PaneitzOperator& op, const SobolevOptions& opts = {}) {
  const double margin = op.coercivity_margin(0.0);
  if (!(margin > 0.0))
    throw CoercivityError("sobolev_constant: coercivity witness fails (margin " + std::to_string(margin) + ")",
                          margin);
  const auto& grid = op.grid();
  std::vector<std::pair<std::string, ScalarField>> starts;
  starts.emplace_back("constant", ScalarField(op.grid_ptr(), 1.0));

  // Bump centred on the deepest point of the potential well W, so the start
  // set moves with translations of the potential.
  std::size_t well = 0;
  const auto& W = op.multiplier();
  for (std::size_t i = 0; i < W.size(); ++i)
    if (W[i] < W[well] - 1e-14 * std::max(1.0, std::abs(W[well]))) well = i;
  const auto centre = grid.coordinates(well);
  ScalarField bump(op.grid_ptr());
  for (std::size_t i = 0; i < bump.size(); ++i) {
    const auto x = grid.coordinates(i);
    double d2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double L = grid.lengths()[a];
      double dx = std::abs(x[a] - centre[a]);
      dx = std::min(dx, L - dx);
      const double w = L / 8.0;
      d2 += dx * dx / (w * w);
    }
    bump[i] = std::exp(-0.5 * d2) + 1e-3;
  }
  starts.emplace_back("bump", std::move(bump));

  for (int k = 0; k < opts.random_starts; ++k) {
    std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k) + 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ScalarField f(op.grid_ptr());
    for (auto& v : f.values()) v = unif(rng);
    starts.emplace_back("random" + std::to_string(k), std::move(f));
  }

  std::vector<std::future<detail::DescentOutcome>> jobs;
  for (auto& s : starts)
    jobs.push_back(std::async(std::launch::async, [&op, &opts, u = s.second]() mutable {
      return detail::sobolev_descent(op, std::move(u), opts);
    }));

  SobolevResult out;
  out.grid_signature = grid.signature();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    auto res = jobs[k].get();
    if (!std::isfinite(res.value))
      throw ConvergenceError("sobolev_constant: descent diverged from start " + starts[k].first, res.value,
                             res.iterations);
    out.starts.push_back({starts[k].first, res.value, res.iterations, res.converged});
    if (res.value < best) {
      best = res.value;
      out.minimizer = std::move(res.u);
    }
  }
  out.value = best;
  return out;
}

inline double sobolev_constant(const PaneitzOperator& op, const SobolevOptions& opts = {}) {
  return sobolev_minimize(op, opts).value;
}

struct PositivityReport {
  bool pass = false;
  double min_green = 0.0;
  double max_green = 0.0;
  double min_random = 0.0;
  double max_random = 0.0;
  double coercivity_margin = 0.0;
  std::vector<std::size_t> sample_points;
  ScalarField first_green_column;
  std::string diagnostic;
};

/// Empirical maximum principle: Green's-function columns P^{-1} delta_j at
/// `samples` evenly spaced points and P^{-1} f for random f >= 0.
inline PositivityReport positivity_check(const PaneitzOperator& op, int samples, std::uint64_t seed = 0) {
  PositivityReport rep;
  rep.coercivity_margin = op.coercivity_margin(0.0);
  if (!(rep.coercivity_margin > 0.0)) {
    rep.pass = false;
    rep.diagnostic = "coercivity witness fails (min(sigma) + min(W) = " + std::to_string(rep.coercivity_margin) +
                     "); Green's function not available";
    return rep;
  }
  const std::size_t npts = op.grid().point_count();
  const double inv_w = 1.0 / op.grid().cell_weight();
  rep.min_green = std::numeric_limits<double>::infinity();
  rep.max_green = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const std::size_t j = static_cast<std::size_t>(s) * npts / static_cast<std::size_t>(std::max(samples, 1));
    rep.sample_points.push_back(j);
    ScalarField delta(op.grid_ptr(), 0.0);
    delta[j] = inv_w;
    ScalarField col = op.solve_shifted(0.0, delta);
    rep.min_green = std::min(rep.min_green, min_value(col));
    rep.max_green = std::max(rep.max_green, max_value(col));
    if (s == 0) rep.first_green_column = std::move(col);
  }
  std::mt19937_64 rng(seed + 0x5851F42D4C957F2DULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  rep.min_random = std::numeric_limits<double>::infinity();
  rep.max_random = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    ScalarField f(op.grid_ptr());
    for (auto& v : f.values()) v = unif(rng);
    ScalarField u = op.solve_shifted(0.0, f);
    rep.min_random = std::min(rep.min_random, min_value(u));
    rep.max_random = std::max(rep.max_random, max_value(u));
  }
  const bool green_ok = samples == 0 || rep.min_green >= -1e-12 * std::abs(rep.max_green);
  const bool random_ok = samples == 0 || rep.min_random >= -1e-12 * std::abs(rep.max_random);
  rep.pass = green_ok && random_ok;
  if (!green_ok) rep.diagnostic = "negative Green's-function entries";
  else if (!random_ok) rep.diagnostic = "inverse maps a nonnegative field to a sign-changing one";
  else rep.diagnostic = "ok";
  return rep;
}

}  // namespace paneitz
