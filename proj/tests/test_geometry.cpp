#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "oracles.hpp"
#include "paneitz/field_io.hpp"
#include "paneitz/geometry.hpp"

using namespace paneitz;
constexpr double kPi = std::numbers::pi;

static double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(Coefficients, FiveTwenty) {
  auto g = derive_coefficients(5, 20.0);
  EXPECT_LE(rel(g.alpha, 5.5), 1e-12);
  EXPECT_LE(rel(g.beta, 6.5625), 1e-12);
  EXPECT_LE(rel(g.Qconst, 13.125), 1e-12);
  EXPECT_DOUBLE_EQ(g.two_sharp, 10.0);
  auto r = symbol_factor_roots(g);
  EXPECT_LE(rel(r[0], 1.75), 1e-12);
  EXPECT_LE(rel(r[1], 3.75), 1e-12);
}

TEST(Coefficients, SixThirty) {
  auto g = derive_coefficients(6, 30.0);
  EXPECT_LE(rel(g.alpha, 10.0), 1e-12);
  EXPECT_LE(rel(g.beta, 24.0), 1e-12);
  EXPECT_LE(rel(g.Qconst, 24.0), 1e-12);
  EXPECT_DOUBLE_EQ(g.two_sharp, 6.0);
  auto r = symbol_factor_roots(g);
  EXPECT_LE(rel(r[0], 4.0), 1e-12);
  EXPECT_LE(rel(r[1], 6.0), 1e-12);
}

TEST(Coefficients, ZeroCurvature) {
  auto g = derive_coefficients(5, 0.0);
  EXPECT_EQ(g.alpha, 0.0);
  EXPECT_EQ(g.beta, 0.0);
  EXPECT_EQ(g.Qconst, 0.0);
}

TEST(Coefficients, RejectsLowDimension) {
  EXPECT_THROW(derive_coefficients(4, 1.0), InvalidArgument);
  EXPECT_THROW(derive_coefficients(2, 1.0), InvalidArgument);
}

TEST(Coefficients, IdentityAndRealRoots) {
  for (int n = 5; n <= 10; ++n)
    for (double R : {1.0, double(n * (n - 1))}) {
      auto g = derive_coefficients(n, R);
      EXPECT_LE(rel(g.beta, g.b_n * g.Qconst), 1e-12) << n << " " << R;
      EXPECT_GE(g.discriminant(), 0.0);
      EXPECT_GT(g.two_sharp, 2.0);
      auto r = symbol_factor_roots(g);
      EXPECT_GT(r[0], 0.0);
      EXPECT_GT(r[1], 0.0);
      if (R > 1.0) {
        const double h = n / 2.0;
        EXPECT_LE(rel(r[0], (h + 1) * (h - 2)), 1e-12);
        EXPECT_LE(rel(r[1], h * (h - 1)), 1e-12);
      }
    }
}

TEST(Grid, ValidatesShape) {
  EXPECT_THROW(make_grid({12}, {1.0}), InvalidArgument);
  EXPECT_THROW(make_grid({8, 8, 8, 8}, {1, 1, 1, 1}), InvalidArgument);
  EXPECT_THROW(make_grid({8}, {-1.0}), InvalidArgument);
  EXPECT_THROW(make_grid({8, 8}, {1.0}), InvalidArgument);
}

TEST(Grid, QuadratureAndSymbol) {
  for (auto [sizes, L] : std::vector<std::pair<std::vector<std::size_t>, std::vector<double>>>{
           {{64}, {2 * kPi}}, {{16, 32}, {1.0, 3.0}}, {{8, 8, 4}, {2.0, 1.5, 0.5}}}) {
    auto g = make_grid(sizes, L);
    ScalarField one(g, 1.0);
    double vol = 1.0;
    for (double l : L) vol *= l;
    EXPECT_LE(rel(integrate(one), vol), 1e-12);
    auto t = g->laplacian_eigenvalues();
    EXPECT_EQ(t[0], 0.0);
    for (double v : t) EXPECT_GE(v, 0.0);
  }
}

TEST(Grid, DifferentGridsMismatch) {
  ScalarField a(make_grid({8}, {1.0}), 1.0);
  ScalarField b(make_grid({16}, {1.0}), 1.0);
  EXPECT_THROW(a += b, GridMismatch);
}

TEST(GradientSquared, Constant) {
  auto g = make_grid({32, 16}, {2.0, 1.0});
  auto d = gradient_squared(ScalarField(g, 3.7));
  EXPECT_LE(sup_norm(d), 1e-13);
}

TEST(GradientSquared, SingleMode) {
  const double L = 3.0;
  auto g = make_grid({64}, {L});
  auto psi = ScalarField::from_function(g, [&](auto x) { return std::sin(2 * kPi * x[0] / L); });
  auto d = gradient_squared(psi);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = g->coordinates(i)[0];
    const double k = 2 * kPi / L;
    EXPECT_NEAR(d[i], k * k * std::pow(std::cos(k * x), 2), 1e-11);
    EXPECT_GE(d[i], 0.0);
  }
}

TEST(GradientSquared, FiniteDifferenceOracle) {
  const double L = 2.0;
  const std::size_t N = 256;
  auto g = make_grid({N}, {L});
  auto psi = ScalarField::from_function(
      g, [&](auto x) { return std::sin(2 * kPi * x[0] / L) + std::sin(4 * kPi * x[0] / L); });
  std::vector<double> f(psi.values().begin(), psi.values().end());
  const double h = L / N;
  auto df = oracle::fd4_derivative(f, h);
  auto d = gradient_squared(psi);
  // fourth-order FD error ~ h^4 |f^(5)| / 30
  const double tol = std::pow(h, 4) * std::pow(4 * kPi / L, 5) * 2.0 / 30.0 * 2.0 * 10.0;
  for (std::size_t i = 0; i < N; ++i) EXPECT_NEAR(d[i], df[i] * df[i], tol);
}

TEST(GradientSquared, Homogeneous) {
  auto g = make_grid({16, 16}, {1.0, 2.0});
  auto psi = ScalarField::from_function(g, [](auto x) { return std::cos(2 * kPi * x[0]) * std::sin(kPi * x[1]) + x[0] * 0; });
  auto d1 = gradient_squared(psi);
  auto d2 = gradient_squared(-2.5 * psi);
  for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_NEAR(d2[i], 6.25 * d1[i], 1e-11 * (1 + d1[i]));
}

TEST(GradientSquared, RejectsNonFinite) {
  auto g = make_grid({8}, {1.0});
  ScalarField psi(g, 0.0);
  psi[3] = std::nan("");
  EXPECT_THROW(gradient_squared(psi), InvalidArgument);
}

TEST(FieldIo, BinaryRoundTrip) {
  auto g = make_grid({8, 4}, {1.5, 2 * kPi});
  auto u = ScalarField::from_function(g, [](auto x) { return std::exp(x[0]) - x[1] / 3.0; });
  auto dir = std::filesystem::temp_directory_path() / "paneitz_io_test";
  std::filesystem::create_directories(dir);
  io::write_binary(u, dir / "u.bin");
  auto v = io::read_binary(dir / "u.bin");
  ASSERT_EQ(v.grid(), u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i], v[i]);

  io::write_csv(u, dir / "u.csv");
  auto w = io::read_csv(dir / "u.csv", g);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i], w[i]);
  std::filesystem::remove_all(dir);
}

TEST(FieldIo, TruncatedBinaryRejected) {
  auto g = make_grid({8}, {1.0});
  auto dir = std::filesystem::temp_directory_path() / "paneitz_io_trunc";
  std::filesystem::create_directories(dir);
  io::write_binary(ScalarField(g, 1.0), dir / "u.bin");
  std::filesystem::resize_file(dir / "u.bin", 40);
  EXPECT_THROW(io::read_binary(dir / "u.bin"), Error);
  std::filesystem::remove_all(dir);
}
