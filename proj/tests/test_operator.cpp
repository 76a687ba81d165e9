#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "paneitz/operator.hpp"

using namespace paneitz;
constexpr double kPi = std::numbers::pi;

namespace {

ScalarField random_field(const GridPtr& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  ScalarField u(g);
  for (auto& v : u.values()) v = d(rng);
  return u;
}

// a few low modes, so the field is exactly representable
ScalarField band_limited(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const double a0 = d(rng), a1 = d(rng), a2 = d(rng), a3 = d(rng);
  const auto& L = g->lengths();
  return ScalarField::from_function(g, [&](auto x) {
    double s = a0;
    for (int ax = 0; ax < g->dim(); ++ax) {
      const double k = 2 * kPi / L[ax];
      s += a1 * std::cos(k * x[ax]) + a2 * std::sin(2 * k * x[ax]) + a3 * std::cos(3 * k * x[ax] + 0.3);
    }
    return s;
  });
}

PaneitzOperator variable_op(const GridPtr& g) {
  auto params = derive_coefficients(5, 20.0);
  auto V = ScalarField::from_function(g, [&](auto x) {
    double s = 0.0;
    for (int ax = 0; ax < g->dim(); ++ax) s += 0.5 * (1 + std::cos(2 * kPi * x[ax] / g->lengths()[ax]));
    return s;
  });
  return PaneitzOperator(params, V);
}

}  // namespace

TEST(Apply, ConstantIsBeta) {
  auto g = make_grid({64}, {2 * kPi});
  auto op = PaneitzOperator::unperturbed(derive_coefficients(5, 20.0), g);
  auto r = op.apply(ScalarField(g, 1.0));
  for (double v : r.values()) EXPECT_NEAR(v, 6.5625, 1e-12);
}

TEST(Apply, CosineMode) {
  auto g = make_grid({64}, {2 * kPi});
  auto op = PaneitzOperator::unperturbed(derive_coefficients(5, 20.0), g);
  auto u = ScalarField::from_function(g, [](auto x) { return std::cos(x[0]); });
  auto r = op.apply(u);
  // roundoff in the top modes is amplified by sigma(t_max) ~ 1e6
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(r[i], 13.0625 * u[i], 5e-10);
}

TEST(Apply, ConstantPotentialShift) {
  auto g = make_grid({32}, {3.0});
  auto params = derive_coefficients(5, 20.0);
  auto op0 = PaneitzOperator::unperturbed(params, g);
  auto opv = PaneitzOperator(params, ScalarField(g, 0.75));
  std::mt19937_64 rng(1);
  auto u = random_field(g, rng);
  auto a = op0.apply(u), b = opv.apply(u);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(b[i], a[i] - params.b_n * 0.75 * u[i], 1e-10);
}

TEST(Apply, MatchesDenseMatrix) {
  const int N = 32;
  const double L = 5.0;
  auto g = make_grid({N}, {L});
  auto op = variable_op(g);
  std::vector<double> W(op.multiplier().values().begin(), op.multiplier().values().end());
  auto M = oracle::dense_paneitz_1d(N, L, op.params().alpha, W);
  std::mt19937_64 rng(7);
  auto u = random_field(g, rng);
  Eigen::VectorXd x(N);
  for (int i = 0; i < N; ++i) x[i] = u[i];
  Eigen::VectorXd y = M * x;
  auto r = op.apply(u);
  for (int i = 0; i < N; ++i) EXPECT_NEAR(r[i], y[i], 1e-9 * (1 + std::abs(y[i])));
}

TEST(Apply, LinearAndSelfAdjoint) {
  std::mt19937_64 rng(42);
  for (auto g : {make_grid({64}, {2 * kPi}), make_grid({16, 32}, {1.0, 2.0})}) {
    auto op = variable_op(g);
    for (int trial = 0; trial < 100; ++trial) {
      auto u = random_field(g, rng), v = random_field(g, rng);
      const double a = 1.7, b = -0.4;
      auto lhs = op.apply(a * u + b * v);
      auto rhs = a * op.apply(u) + b * op.apply(v);
      EXPECT_LE(sup_distance(lhs, rhs), 1e-12 * sup_norm(rhs));
      const double puv = inner(op.apply(u), v), upv = inner(u, op.apply(v));
      EXPECT_LE(std::abs(puv - upv), 1e-10 * std::max(std::abs(puv), sup_norm(rhs)));
    }
  }
}

TEST(Apply, EnergyIdentity) {
  auto g = make_grid({32}, {4.0});
  auto op = variable_op(g);
  std::mt19937_64 rng(3);
  auto u = random_field(g, rng);
  // spectral sum by an explicit DFT
  const int N = 32;
  double spec = 0.0;
  for (int m = -N / 2; m < N / 2; ++m) {
    double re = 0, im = 0;
    for (int j = 0; j < N; ++j) {
      re += u[j] * std::cos(2 * kPi * m * j / N);
      im -= u[j] * std::sin(2 * kPi * m * j / N);
    }
    const double k = 2 * kPi * m / 4.0;
    const double t = k * k;
    spec += (t * t + op.params().alpha * t) * (re * re + im * im);
  }
  spec *= g->spectral_weight();
  double pot = 0.0;
  for (int j = 0; j < N; ++j) pot += op.multiplier()[j] * u[j] * u[j] * g->cell_weight();
  const double q = inner(u, op.apply(u));
  EXPECT_LE(std::abs(q - (spec + pot)), 1e-10 * std::abs(q));
}

TEST(Apply, GridMismatchRejected) {
  auto op = PaneitzOperator::unperturbed(derive_coefficients(5, 20.0), make_grid({16}, {1.0}));
  EXPECT_THROW(op.apply(ScalarField(make_grid({32}, {1.0}), 1.0)), GridMismatch);
}

TEST(SolveShifted, ConstantAndMode) {
  auto g = make_grid({64}, {2 * kPi});
  auto op = PaneitzOperator::unperturbed(derive_coefficients(5, 20.0), g);
  const double lam = 2.0;
  auto c = op.solve_shifted(lam, ScalarField(g, 3.0));
  for (double v : c.values()) EXPECT_NEAR(v, 3.0 / (6.5625 + lam), 1e-13);
  auto mode = ScalarField::from_function(g, [](auto x) { return std::cos(2 * x[0]); });
  const double s = 16 + 5.5 * 4 + 6.5625 + lam;
  auto r = op.solve_shifted(lam, s * mode);
  EXPECT_LE(sup_distance(r, mode), 1e-12);
}

TEST(SolveShifted, ResidualOnVariablePotential) {
  std::mt19937_64 rng(11);
  // on much finer grids the check itself is limited by roundoff times sigma(t_max)
  for (auto g : {make_grid({128}, {2 * kPi}), make_grid({32, 32}, {2 * kPi, 2 * kPi})}) {
    auto op = variable_op(g);
    for (double lam : {0.0, 1.0, 100.0}) {
      auto rhs = random_field(g, rng);
      auto u = op.solve_shifted(lam, rhs);
      auto res = op.apply(u);
      res.axpy(lam, u);
      EXPECT_LE(sup_distance(res, rhs), 1e-10 * sup_norm(rhs));
    }
  }
}

TEST(SolveShifted, InvertsApplyOnBandLimited) {
  std::mt19937_64 rng(5);
  for (auto g : {make_grid({64}, {2 * kPi}), make_grid({16, 16}, {1.0, 1.0})}) {
    auto op = variable_op(g);
    for (int trial = 0; trial < 10; ++trial) {
      auto u = band_limited(g, rng);
      const double lam = 0.5 * trial;
      auto rhs = op.apply(u);
      rhs.axpy(lam, u);
      EXPECT_LE(sup_distance(op.solve_shifted(lam, rhs), u), 1e-10 * sup_norm(u));
    }
  }
}

TEST(SolveShifted, WitnessRefusal) {
  auto g = make_grid({32}, {1.0});
  auto params = derive_coefficients(5, 20.0);
  PaneitzOperator op(params, ScalarField(g, params.Qconst + 2.0));
  try {
    op.solve_shifted(0.0, ScalarField(g, 1.0));
    FAIL();
  } catch (const CoercivityError& e) {
    EXPECT_LT(e.margin(), 0.0);
  }
  EXPECT_NO_THROW(op.solve_shifted(1.5, ScalarField(g, 1.0)));
}

TEST(SolveShifted, IterationCapReported) {
  auto g = make_grid({64}, {2 * kPi});
  auto op = variable_op(g);
  std::mt19937_64 rng(2);
  try {
    op.solve_shifted(0.0, random_field(g, rng), {1e-30, 3});
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_residual(), 0.0);
    EXPECT_EQ(e.iterations(), 3);
  }
}

TEST(ConformalQ, Normalization) {
  auto g = make_grid({32}, {2 * kPi});
  for (int n : {5, 6, 8}) {
    auto params = derive_coefficients(n, n * (n - 1.0));
    auto op = PaneitzOperator::unperturbed(params, g);
    auto q1 = conformal_Q(op, ScalarField(g, 1.0));
    for (double v : q1.values()) EXPECT_LE(std::abs(v - params.Qconst), 1e-10 * params.Qconst);
    for (double c : {0.3, 2.0, 7.5}) {
      auto qc = conformal_Q(op, ScalarField(g, c));
      const double expect = std::pow(c, -8.0 / (n - 4.0)) * params.Qconst;
      for (double v : qc.values()) EXPECT_LE(std::abs(v - expect), 1e-10 * expect);
    }
  }
}

TEST(ConformalQ, PerturbedFactorAgainstDenseSymbol) {
  const int N = 32;
  const double L = 2 * kPi;
  auto g = make_grid({N}, {L});
  auto params = derive_coefficients(5, 20.0);
  auto op = PaneitzOperator::unperturbed(params, g);
  auto u = ScalarField::from_function(g, [](auto x) { return 1.0 + 0.1 * std::cos(x[0]); });
  auto q = conformal_Q(op, u);
  auto M = oracle::dense_paneitz_1d(N, L, params.alpha, std::vector<double>(N, params.beta));
  Eigen::VectorXd x(N);
  for (int i = 0; i < N; ++i) x[i] = u[i];
  Eigen::VectorXd pu = M * x;
  for (int i = 0; i < N; ++i) {
    const double expect = 2.0 * std::pow(u[i], -9.0) * pu[i];
    EXPECT_TRUE(std::isfinite(q[i]));
    EXPECT_NEAR(q[i], expect, 1e-10 * std::abs(expect));
  }
}

TEST(ConformalQ, RejectsNonPositive) {
  auto g = make_grid({8}, {1.0});
  auto op = PaneitzOperator::unperturbed(derive_coefficients(5, 20.0), g);
  ScalarField u(g, 1.0);
  u[2] = 0.0;
  EXPECT_THROW(conformal_Q(op, u), InvalidArgument);
}
