#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "paneitz/conditions.hpp"
#include "paneitz/lambda_star.hpp"

using namespace paneitz;
constexpr double kPi = std::numbers::pi;

namespace {

const GeometryParams kParams = derive_coefficients(5, 20.0);

struct Fixture {
  GridPtr grid = make_grid({64}, {2 * kPi});
  PaneitzOperator op = PaneitzOperator::unperturbed(kParams, grid);
  double V = 2 * kPi;

  ProblemSpec constants(double a, double b, double p, double q, Nonlinearity mode) const {
    return {ScalarField(grid, a), ScalarField(grid, b), p, q, mode};
  }
};

// Mountain-pass geometry by brute force: is there t in (0, r0] where the
// upper bound t^2/2 + I t^{1-p}/(p-1) of the energy on the ray drops below
// the rim r0^2 (q-1)/(2(q+1))?
bool cond_oracle(double S, double b_norm, double I, double p, double q) {
  const double r0 = std::pow(b_norm, -1 / (q - 1)) * std::pow(S, (q + 1) / (2 * (q - 1)));
  const double rim = r0 * r0 * (q - 1) / (2 * (q + 1));
  auto ub = [&](double t) { return 0.5 * t * t + I * std::pow(t, 1 - p) / (p - 1); };
  return ub(oracle::golden_min(ub, 1e-9 * r0, r0)) < rim;
}

}  // namespace

TEST(Tangent, ReferenceExample) {
  auto ts = tangent_slope_root(1, 1, 3, 2);
  EXPECT_NEAR(ts.t0, std::pow(4.0, 0.2), 1e-14);
  EXPECT_NEAR(ts.lambda_c, 1.6493848884661246, 1e-12);
  // f(t)/t - f'(t) for f = 1/t^3 + t^2
  auto roots = oracle::scan_roots([](double t) { return 4 * std::pow(t, -4.0) - t; }, 1e-3, 1e3);
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_NEAR(ts.t0, roots[0], 1e-12);
  EXPECT_NEAR(ts.t0_numeric, roots[0], 1e-12);
}

TEST(Tangent, SmallALimit) {
  double prev_t = 1e300, prev_l = 1e300;
  for (double a : {1e-2, 1e-4, 1e-6, 1e-8}) {
    auto ts = tangent_slope_root(a, 1, 3, 2);
    EXPECT_LT(ts.t0, prev_t);
    EXPECT_LT(ts.lambda_c, prev_l);
    prev_t = ts.t0;
    prev_l = ts.lambda_c;
  }
  EXPECT_LT(prev_l, 1e-1);
}

TEST(Tangent, RootCountAroundThreshold) {
  for (auto [a, b, p, q] : {std::tuple{1.0, 1.0, 3.0, 2.0}, {2.0, 0.5, 1.5, 3.0}, {0.3, 4.0, 5.0, 1.5}}) {
    auto ts = tangent_slope_root(a, b, p, q);
    for (double f : {0.9, 1.1}) {
      const double lam = f * ts.lambda_c;
      auto roots = oracle::scan_roots(
          [&](double t) { return lam * t - a * std::pow(t, -p) - b * std::pow(t, q); }, 1e-4, 1e3, 200000);
      EXPECT_EQ(roots.size(), f < 1 ? 0u : 2u) << a << " " << b << " " << p << " " << q;
    }
  }
}

TEST(Tangent, Errors) {
  EXPECT_THROW(tangent_slope_root(1, 1, 3, 1), InvalidArgument);
  EXPECT_THROW(tangent_slope_root(0, 1, 3, 2), InvalidArgument);
  EXPECT_THROW(tangent_slope_root(1, 1, 1, 2), InvalidArgument);
}

TEST(Ineq, DenominatorIsTangencyValue) {
  Fixture fx;
  auto eig = principal_eigenpair(fx.op);
  for (double p : {1.5, 2.0, 3.0, 5.0, 8.0})
    for (double q : {1.2, 1.5, 2.0, 3.0, 6.0}) {
      auto r = check_existence_ineq(fx.op, fx.constants(1, -1, p, q, Nonlinearity::absorption), eig);
      EXPECT_NEAR(r.ingredients.at("denominator"), tangent_slope_root(1, 1, p, q).lambda_c, 1e-10);
      EXPECT_NEAR(r.ingredients.at("phi1_exponent"), 0.0, 1e-14);
    }
}

TEST(Ineq, Examples) {
  Fixture fx;
  auto eig = principal_eigenpair(fx.op);
  auto r = check_existence_ineq(fx.op, fx.constants(1, -1, 3, 2, Nonlinearity::absorption), eig);
  EXPECT_TRUE(r.satisfied);
  EXPECT_NEAR(r.lhs, 1.0, 1e-14);
  EXPECT_NEAR(r.margin, 6.5625 / 1.6493848884661246 - 1, 1e-9);
  auto zero = check_existence_ineq(fx.op, fx.constants(1, 0.5, 3, 2, Nonlinearity::absorption), eig);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_TRUE(zero.satisfied);
  EXPECT_THROW(check_existence_ineq(fx.op, fx.constants(1, 1, 3, 2, Nonlinearity::source), eig), InvalidArgument);
}

TEST(Ineq, HomogeneityInA) {
  auto g = make_grid({32}, {3.0});
  auto psi = ScalarField::from_function(g, [](auto x) { return 0.2 * std::sin(2 * kPi * x[0] / 3.0); });
  auto op = PaneitzOperator::from_psi(kParams, psi);
  auto eig = principal_eigenpair(op);
  auto A = ScalarField::from_function(g, [](auto x) { return 1.0 + 0.5 * std::cos(x[0]); });
  auto B = ScalarField::from_function(g, [](auto x) { return -1.0 + 0.3 * std::sin(x[0]); });
  ProblemSpec prob{A, B, 2.5, 1.7, Nonlinearity::absorption};
  const double base = check_existence_ineq(op, prob, eig).lhs;
  for (double c : {0.1, 3.0, 1e4}) {
    ProblemSpec scaled = prob;
    scaled.A *= c;
    EXPECT_NEAR(check_existence_ineq(op, scaled, eig).lhs, std::pow(c, 0.7 / 4.2) * base, 1e-12 * base * c);
  }
}

TEST(Cond, ZeroBAndLinearInA) {
  Fixture fx;
  const double S = sobolev_constant(fx.op);
  auto r0 = check_existence_cond(fx.op, fx.constants(1, 0, 3, 2, Nonlinearity::source), std::nullopt, S);
  EXPECT_EQ(r0.lhs, 0.0);
  EXPECT_TRUE(r0.satisfied);
  auto phi = ScalarField::from_function(fx.grid, [](auto x) { return 1.0 + 0.3 * std::cos(x[0]); });
  auto prob = fx.constants(1, 0.7, 3, 2, Nonlinearity::source);
  prob.A = ScalarField::from_function(fx.grid, [](auto x) { return 2.0 + std::sin(x[0]); });
  const double a = check_existence_cond(fx.op, prob, phi, S).lhs;
  prob.A *= 2.0;
  EXPECT_NEAR(check_existence_cond(fx.op, prob, phi, S).lhs, 2 * a, 1e-14 * a);
}

TEST(Cond, ThresholdInB) {
  Fixture fx;
  const double S = sobolev_constant(fx.op);
  const double p = 3, q = 2;
  const double s = 10.0 / 7.0;
  // independent ingredients: |1|_psi^2 = beta V, |b|_s = b V^{1/s}, int A = V
  const double I = std::pow(std::sqrt(6.5625 * fx.V), p - 1) * fx.V;
  auto oracle_ok = [&](double b) { return cond_oracle(S, b * std::pow(fx.V, 1 / s), I, p, q); };
  const double bstar = oracle::bisect([&](double b) { return oracle_ok(b) ? -1.0 : 1.0; }, 1e-6, 1e3, 1e-13);
  for (double f : {0.5, 0.9, 0.999, 1.001, 1.1, 2.0}) {
    auto r = check_existence_cond(fx.op, fx.constants(1, f * bstar, p, q, Nonlinearity::source), std::nullopt, S);
    EXPECT_EQ(r.satisfied, f < 1) << f;
  }
  // the closed-form crossing of lhs(b) = C
  auto r1 = check_existence_cond(fx.op, fx.constants(1, 1, p, q, Nonlinearity::source), std::nullopt, S);
  EXPECT_NEAR(std::pow(r1.rhs / r1.lhs, (q - 1) / (p + 1)), bstar, 1e-8 * bstar);
}

TEST(Cond, RandomFixturesAgreeWithOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto g = make_grid({32}, {2 * kPi});
  auto op = PaneitzOperator::unperturbed(kParams, g);
  const double S = sobolev_constant(op);
  int agree = 0, total = 0;
  for (int k = 0; k < 50; ++k) {
    const double p = 1.5 + 4 * U(rng), q = 1.3 + 3 * U(rng);
    auto A = ScalarField::from_function(g, [&, c = U(rng)](auto x) { return 0.5 + c * (1 + std::cos(x[0])); });
    auto B = ScalarField::from_function(g, [&, c = U(rng)](auto x) { return std::exp(-3 + 6 * c) * (1.2 + std::sin(x[0])); });
    auto phi = ScalarField::from_function(g, [&, c = 0.5 * U(rng)](auto x) { return 1 + c * std::cos(x[0]); });
    ProblemSpec prob{A, B, p, q, Nonlinearity::source};
    auto r = check_existence_cond(op, prob, phi, S);
    const double I = std::pow(r.ingredients.at("phi_energy_norm"), p - 1) * r.ingredients.at("int_A_over_phi");
    // skip points within 1e-6 of the boundary
    if (std::abs(r.margin) < 1e-6 * r.rhs) continue;
    ++total;
    agree += cond_oracle(S, r.ingredients.at("b_norm"), I, p, q) == r.satisfied;
  }
  EXPECT_EQ(agree, total);
  EXPECT_GT(total, 40);
}

TEST(Cond, CriticalExponentRefusedByDefault) {
  Fixture fx;
  auto prob = fx.constants(1, 1e-3, 11, 9, Nonlinearity::source);
  EXPECT_THROW(check_existence_cond(fx.op, prob, std::nullopt, 18.0), InvalidArgument);
  auto r = check_existence_cond(fx.op, prob, std::nullopt, 18.0, true);
  EXPECT_TRUE(std::isinf(r.ingredients.at("b_norm_exponent")));
  EXPECT_NEAR(r.ingredients.at("b_norm"), 1e-3, 1e-18);
}

TEST(Nonexistence, SweepAgreesWithScalarOracle) {
  Fixture fx;
  int certified = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double lam = 0.2 * std::pow(100.0, i / 9.0);
      const double q = 1.2 + 3.3 * j / 9.0;
      const double p = 3;
      auto r = check_nonexistence(fx.op, fx.constants(1, lam, p, q, Nonlinearity::source));
      auto roots = oracle::scan_roots(
          [&](double u) { return 6.5625 * u - std::pow(u, -p) - lam * std::pow(u, q); }, 1e-6, 1e3, 100000);
      if (r.satisfied) {
        ++certified;
        EXPECT_TRUE(roots.empty()) << lam << " " << q;
      }
    }
  EXPECT_GT(certified, 10);
}

TEST(Nonexistence, PrintedFormulaIsReportedNotUsed) {
  Fixture fx;
  auto r = check_nonexistence(fx.op, fx.constants(1, 3, 3, 2, Nonlinearity::source));
  EXPECT_EQ(r.lhs, r.ingredients.at("derived_threshold"));
  EXPECT_NEAR(r.ingredients.at("discrepancy"), r.ingredients.at("printed_lhs") - r.lhs, 1e-12);
}

TEST(Nonexistence, Preconditions) {
  Fixture fx;
  EXPECT_THROW(check_nonexistence(fx.op, fx.constants(0, 1, 3, 2, Nonlinearity::source)), InvalidArgument);
  auto zero_b = check_nonexistence(fx.op, fx.constants(1, 0, 3, 2, Nonlinearity::source));
  EXPECT_FALSE(zero_b.applicable);
  EXPECT_FALSE(zero_b.satisfied);
  auto absorb = check_nonexistence(fx.op, fx.constants(1, 1, 3, 2, Nonlinearity::absorption));
  EXPECT_FALSE(absorb.applicable);
}

TEST(Nonexistence, MinimizerAndLowerBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const double p = 1.2 + 5 * U(rng), q = 1.2 + 5 * U(rng), K = std::exp(-2 + 4 * U(rng));
    auto f = [&](double X) { return std::pow(X, (q - 1) / q) + std::pow(K, (p + q) / q) * std::pow(X, -(p + 1) / q); };
    const double xs = nonexistence_minimizer(K, p, q);
    const double m = nonexistence_threshold(K, p, q);
    // value by golden section; location by the sign change of the derivative
    const double xg = oracle::golden_min(f, 1e-6 * xs, 1e3 * xs);
    EXPECT_NEAR(f(xg), m, 1e-10 * m);
    auto df = [&](double X) { return (q - 1) / q * std::pow(X, -1 / q) - (p + 1) / q * std::pow(K, (p + q) / q) * std::pow(X, -(p + 1) / q - 1); };
    EXPECT_NEAR(oracle::bisect(df, 1e-6 * xs, 1e3 * xs, 1e-15), xs, 1e-10 * xs);
    for (int j = 0; j < 100; ++j) {
      const double X = xs * std::exp(-6 + 12 * U(rng));
      EXPECT_GE(f(X), m * (1 - 1e-14));
    }
  }
}

TEST(Certificates, MutuallyExclusiveOnConstants) {
  Fixture fx;
  const double S = sobolev_constant(fx.op);
  for (double q : {1.5, 2.0, 3.0})
    for (double b = 1e-3; b < 1e3; b *= 1.7) {
      auto prob = fx.constants(1, b, 3, q, Nonlinearity::source);
      EXPECT_FALSE(check_existence_cond(fx.op, prob, std::nullopt, S).satisfied &&
                   check_nonexistence(fx.op, prob).satisfied);
    }
}

TEST(Certificates, Pure) {
  Fixture fx;
  auto prob = fx.constants(1, 0.8, 3, 2, Nonlinearity::source);
  auto a = check_nonexistence(fx.op, prob), b = check_nonexistence(fx.op, prob);
  EXPECT_EQ(a.lhs, b.lhs);
  EXPECT_EQ(a.rhs, b.rhs);
  EXPECT_EQ(a.ingredients, b.ingredients);
  auto c = check_existence_cond(fx.op, prob, std::nullopt, 18.0), d = check_existence_cond(fx.op, prob, std::nullopt, 18.0);
  EXPECT_EQ(c.ingredients, d.ingredients);
  EXPECT_EQ(c.margin, d.margin);
}

TEST(LambdaStar, BracketOnReference) {
  Fixture fx;
  const double S = sobolev_constant(fx.op);
  auto r = lambda_star_bracket(fx.op, 3, 2, S);
  EXPECT_LT(r.lower, r.upper);
  EXPECT_TRUE(r.anomalies.empty());
  // constant data: the upper bound is the fold of beta u = 1/u^3 + lambda u^2
  auto h = [](double t) { return std::pow(t, -4.0) + t; };
  const double fold = std::pow(6.5625 / h(oracle::golden_min(h, 0.1, 10.0)), 1.25);
  EXPECT_NEAR(r.upper, fold, 1e-9 * fold);
}

TEST(LambdaStar, LowerScalesWithC) {
  Fixture fx;
  const double S = sobolev_constant(fx.op);
  const double p = 3, q = 2;
  auto base = lambda_star_bracket(fx.op, p, q, S);
  // C ~ S^{(q+1)(p+1)/(2(q-1))}, and lhs does not involve S
  const double S2 = S * std::pow(2.0, 2 * (q - 1) / ((q + 1) * (p + 1)));
  auto doubled = lambda_star_bracket(fx.op, p, q, S2);
  EXPECT_NEAR(doubled.ingredients.at("C_derived"), 2 * base.ingredients.at("C_derived"), 1e-12 * base.ingredients.at("C_derived"));
  EXPECT_NEAR(doubled.lower, base.lower * std::pow(2.0, (q - 1) / (p + 1)), 1e-12 * base.lower);
  EXPECT_EQ(doubled.upper, base.upper);
}

TEST(LambdaStar, VanishingQGivesZeroUpper) {
  Fixture fx;
  PaneitzOperator op(kParams, ScalarField(fx.grid, kParams.Qconst));
  auto r = lambda_star_bracket(op, 3, 2, 10.0);
  EXPECT_EQ(r.upper, 0.0);
}

TEST(LambdaStar, BisectionContract) {
  Fixture fx;
  const double S = sobolev_constant(fx.op);
  LambdaStarOptions coarse;
  coarse.tolerance = 2e-2;
  auto a = lambda_star_bisect(fx.op, 3, 2, S, coarse);
  ASSERT_FALSE(a.probes.empty());
  EXPECT_EQ(a.probes.front().lambda, 0.0);
  EXPECT_TRUE(a.probes.front().feasible);
  EXPECT_LE(a.interval_hi - a.interval_lo, 2e-2);
  LambdaStarOptions fine = coarse;
  fine.tolerance = 1e-2;
  auto b = lambda_star_bisect(fx.op, 3, 2, S, fine);
  EXPECT_LE(b.interval_hi - b.interval_lo, 0.5 * (a.interval_hi - a.interval_lo) + 1e-15);
  EXPECT_GE(b.interval_lo, a.interval_lo);
  EXPECT_LE(b.interval_hi, a.interval_hi);
  ASSERT_TRUE(b.empirical);
  EXPECT_GE(*b.empirical, b.lower);
  EXPECT_LE(*b.empirical, b.upper);
}
