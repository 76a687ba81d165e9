#pragma once

// Discrete P_{g,psi} = Delta^2 + alpha * Delta + W(x), where W = b_n (Q - |grad psi|^2).
// The constant-coefficient part is diagonal in Fourier space.

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "paneitz/geometry.hpp"

namespace paneitz {

struct LinearSolveOptions {
  double relative_tolerance = 1e-12;
  int max_iterations = 10000;
};

struct LinearSolveResult {
  ScalarField solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

class PaneitzOperator {
 public:
  /// Operator with potential V = |grad psi|^2.
  static PaneitzOperator from_psi(const GeometryParams& params, const ScalarField& psi) {
    return PaneitzOperator(params, gradient_squared(psi));
  }

  /// psi = 0: W is the constant beta.
  static PaneitzOperator unperturbed(const GeometryParams& params, GridPtr grid) {
    return PaneitzOperator(params, ScalarField(std::move(grid), 0.0));
  }

  /// User-supplied potential V standing in for |grad psi|^2.
  PaneitzOperator(const GeometryParams& params, ScalarField potential)
      : params_(params), grid_(potential.grid_ptr()), potential_(std::move(potential)) {
    if (!potential_.all_finite()) throw InvalidArgument("potential must be finite");
    multiplier_ = map(potential_, [&](double v) { return params_.b_n * (params_.Qconst - v); });
    const auto t = grid_->laplacian_eigenvalues();
    symbol_.resize(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) symbol_[k] = t[k] * t[k] + params_.alpha * t[k];
    min_w_ = min_value(multiplier_);
    max_w_ = max_value(multiplier_);
    mean_w_ = integrate(multiplier_) / grid_->volume();
  }

  const GeometryParams& params() const noexcept { return params_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const SpectralGrid& grid() const noexcept { return *grid_; }
  /// V = |grad psi|^2 (or the supplied potential).
  const ScalarField& potential() const noexcept { return potential_; }
  /// W = b_n (Q - V), the full zeroth-order multiplier.
  const ScalarField& multiplier() const noexcept { return multiplier_; }
  /// sigma(t) = t^2 + alpha t per half-spectrum mode.
  const std::vector<double>& symbol() const noexcept { return symbol_; }
  double min_multiplier() const noexcept { return min_w_; }
  double max_multiplier() const noexcept { return max_w_; }
  double mean_multiplier() const noexcept { return mean_w_; }

  /// Sufficient coercivity margin of P + lambda: min sigma + min W + lambda
  /// (min sigma = 0 at the constant mode when alpha >= 0).
  double coercivity_margin(double lambda = 0.0) const { return min_symbol() + min_w_ + lambda; }

  double min_symbol() const {
    double m = std::numeric_limits<double>::infinity();
    for (double s : symbol_) m = std::min(m, s);
    return m;
  }

  /// Applies only the Fourier multiplier m(k) to u.
  template <class Multiplier>
  ScalarField apply_multiplier(const ScalarField& u, Multiplier&& m) const {
    check_grid(u);
    std::vector<std::complex<double>> hat(grid_->mode_count());
    grid_->forward(u.values(), hat);
    for (std::size_t k = 0; k < hat.size(); ++k) hat[k] *= m(k);
    ScalarField out(grid_);
    grid_->inverse(hat, out.values());
    return out;
  }

  ScalarField apply(const ScalarField& u) const {
    if (!u.all_finite()) throw InvalidArgument("apply: non-finite input field");
    ScalarField out = apply_multiplier(u, [&](std::size_t k) { return symbol_[k]; });
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += multiplier_[i] * u[i];
    return out;
  }

  /// Solves (P + lambda) u = rhs with conjugate gradients preconditioned by
  /// the exact inverse of sigma(t) + mean(W) + lambda.
  LinearSolveResult solve_shifted_with_info(double lambda, const ScalarField& rhs,
                                            const LinearSolveOptions& opts = {}) const {
    check_grid(rhs);
    if (!(lambda >= 0.0)) throw InvalidArgument("solve_shifted: lambda must be >= 0");
    const double margin = coercivity_margin(lambda);
    if (!(margin > 0.0))
      throw CoercivityError("solve_shifted: coercivity witness min(sigma) + min(W) + lambda = " +
                                std::to_string(margin) + " <= 0; operator possibly indefinite",
                            margin);
    const double shift = mean_w_ + lambda;
    auto precondition = [&](const ScalarField& r) {
      return apply_multiplier(r, [&](std::size_t k) { return 1.0 / (symbol_[k] + shift); });
    };
    auto op = [&](const ScalarField& x) {
      ScalarField y = apply(x);
      y.axpy(lambda, x);
      return y;
    };

    LinearSolveResult result{ScalarField(grid_, 0.0), 0, 0.0};
    const double bnorm = euclid(rhs);
    if (bnorm == 0.0) return result;

    ScalarField x = precondition(rhs);
    ScalarField r = rhs - op(x);
    ScalarField z = precondition(r);
    ScalarField p = z;
    double rz = dot(r, z);
    double rel = euclid(r) / bnorm;
    int it = 0;
    while (rel > opts.relative_tolerance) {
      if (it >= opts.max_iterations)
        throw ConvergenceError("solve_shifted: no convergence within " + std::to_string(it) + " iterations",
                               rel, it);
      ScalarField ap = op(p);
      const double pap = dot(p, ap);
      if (!(pap > 0.0))
        throw ConvergenceError("solve_shifted: non-positive curvature, operator not positive definite", rel, it);
      const double a = rz / pap;
      x.axpy(a, p);
      r.axpy(-a, ap);
      ++it;
      rel = euclid(r) / bnorm;
      if (rel <= opts.relative_tolerance) break;
      z = precondition(r);
      const double rz_new = dot(r, z);
      const double b = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + b * p[i];
    }
    result.solution = std::move(x);
    result.iterations = it;
    result.relative_residual = rel;
    return result;
  }

  ScalarField solve_shifted(double lambda, const ScalarField& rhs, const LinearSolveOptions& opts = {}) const {
    return solve_shifted_with_info(lambda, rhs, opts).solution;
  }

  void check_grid(const ScalarField& u) const {
    if (u.grid_ptr() != grid_ && !(u.grid() == *grid_))
      throw GridMismatch("field and operator live on different grids");
  }

 private:
  static double dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  static double euclid(const ScalarField& a) { return std::sqrt(dot(a, a)); }

  GeometryParams params_;
  GridPtr grid_;
  ScalarField potential_;
  ScalarField multiplier_;
  std::vector<double> symbol_;
  double min_w_ = 0.0;
  double max_w_ = 0.0;
  double mean_w_ = 0.0;
};

/// Q-curvature of the conformal metric u^{4/(n-4)} g, normalized so that
/// u = 1 returns Qconst: (2/(n-4)) u^{-(n+4)/(n-4)} P u. Requires psi = 0.
inline ScalarField conformal_Q(const PaneitzOperator& op, const ScalarField& u) {
  if (!(min_value(u) > 0.0)) throw InvalidArgument("conformal_Q: conformal factor must be positive");
  const double n = op.params().n;
  const double expo = -(n + 4.0) / (n - 4.0);
  const double norm = 2.0 / (n - 4.0);
  ScalarField pu = op.apply(u);
  for (std::size_t i = 0; i < pu.size(); ++i) pu[i] *= norm * std::pow(u[i], expo);
  return pu;
}

}  // namespace paneitz
