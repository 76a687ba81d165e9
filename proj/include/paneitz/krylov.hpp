#pragma once

#include <cmath>
#include <vector>

#include "paneitz/error.hpp"
#include "paneitz/geometry.hpp"

namespace paneitz {

struct GmresOptions {
  double relative_tolerance = 1e-11;
  int restart = 60;
  int max_iterations = 2000;
};

struct GmresResult {
  ScalarField solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Right-preconditioned restarted GMRES for A x = b, used where the system is
/// symmetric but indefinite (Newton steps at saddle points).
template <class ApplyA, class ApplyPrec>
GmresResult gmres(ApplyA&& apply_a, ApplyPrec&& apply_prec, const ScalarField& b, const GmresOptions& opts = {}) {
  auto dot = [](const ScalarField& x, const ScalarField& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
  };
  const double bnorm = std::sqrt(dot(b, b));
  GmresResult res{ScalarField(b.grid_ptr(), 0.0), 0, 0.0};
  if (bnorm == 0.0) return res;

  ScalarField& x = res.solution;
  const int m = opts.restart;
  int total = 0;
  double rel = 1.0;
  while (total < opts.max_iterations) {
    ScalarField r = b - apply_a(x);
    double beta = std::sqrt(dot(r, r));
    rel = beta / bnorm;
    if (rel <= opts.relative_tolerance) break;

    std::vector<ScalarField> v;
    std::vector<ScalarField> z;
    v.push_back((1.0 / beta) * r);
    std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < m && total < opts.max_iterations; ++k, ++total) {
      z.push_back(apply_prec(v[k]));
      ScalarField w = apply_a(z[k]);
      for (int i = 0; i <= k; ++i) {
        h[i][k] = dot(w, v[i]);
        w.axpy(-h[i][k], v[i]);
      }
      h[k + 1][k] = std::sqrt(dot(w, w));
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
        h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
        h[i][k] = t;
      }
      const double denom = std::hypot(h[k][k], h[k + 1][k]);
      cs[k] = denom == 0.0 ? 1.0 : h[k][k] / denom;
      sn[k] = denom == 0.0 ? 0.0 : h[k + 1][k] / denom;
      const double hk1 = h[k + 1][k];
      h[k][k] = cs[k] * h[k][k] + sn[k] * hk1;
      h[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      rel = std::abs(g[k + 1]) / bnorm;
      if (rel <= opts.relative_tolerance || hk1 == 0.0) {
        ++k;
        ++total;
        break;
      }
      v.push_back((1.0 / hk1) * w);
    }
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[i][j] * y[j];
      y[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
    }
    for (int i = 0; i < k; ++i) x.axpy(y[i], z[i]);
    if (rel <= opts.relative_tolerance) break;
  }
  ScalarField r = b - apply_a(x);
  res.relative_residual = std::sqrt(dot(r, r)) / bnorm;
  res.iterations = total;
  if (res.relative_residual > std::max(opts.relative_tolerance * 100.0, 1e-8))
    throw ConvergenceError("gmres: no convergence", res.relative_residual, total);
  return res;
}

}  // namespace paneitz
