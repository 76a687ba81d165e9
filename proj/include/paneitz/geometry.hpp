#pragma once

// Einstein-model coefficients of the Paneitz-Branson operator and the
// periodic spectral grid that stands in for the closed manifold.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "paneitz/error.hpp"
#include "paneitz/fft.hpp"

namespace paneitz {

/// Constants of P on an Einstein metric of dimension n and scalar curvature R:
///   P u = Delta^2 u + alpha * Delta u + beta * u   (Delta with positive spectrum)
struct GeometryParams {
  int n = 5;
  double R = 0.0;
  double alpha = 0.0;      ///< (n^2 - 2n - 4) R / (2n(n-1))
  double beta = 0.0;       ///< (n-4)(n^2-4) R^2 / (16 n (n-1)^2)
  double Qconst = 0.0;     ///< (n^2-4) R^2 / (8 n (n-1)^2)
  double b_n = 0.0;        ///< (n-4)/2, multiplies Q_psi in P_{g,psi}
  double a_n = 0.0;        ///< (n-4)/4, only used by the action functional
  double two_sharp = 0.0;  ///< 2n/(n-4)

  double discriminant() const { return alpha * alpha - 4.0 * beta; }
};

inline GeometryParams derive_coefficients(int n, double R) {
  if (n < 5) throw InvalidArgument("analytic dimension must satisfy n >= 5, got " + std::to_string(n));
  if (!std::isfinite(R)) throw InvalidArgument("scalar curvature must be finite");
  const double nd = n;
  GeometryParams g;
  g.n = n;
  g.R = R;
  g.alpha = (nd * nd - 2.0 * nd - 4.0) * R / (2.0 * nd * (nd - 1.0));
  g.beta = (nd - 4.0) * (nd * nd - 4.0) * R * R / (16.0 * nd * (nd - 1.0) * (nd - 1.0));
  g.Qconst = (nd * nd - 4.0) * R * R / (8.0 * nd * (nd - 1.0) * (nd - 1.0));
  g.b_n = (nd - 4.0) / 2.0;
  g.a_n = (nd - 4.0) / 4.0;
  g.two_sharp = 2.0 * nd / (nd - 4.0);
  return g;
}

/// Roots r1 <= r2 of t^2 + alpha t + beta = (t + r1)(t + r2), returned as
/// positive numbers when alpha, beta > 0.
inline std::array<double, 2> symbol_factor_roots(const GeometryParams& g) {
  const double disc = std::max(0.0, g.discriminant());
  const double s = std::sqrt(disc);
  // Avoid cancellation in the smaller root.
  const double big = (g.alpha + s) / 2.0;
  const double small = big != 0.0 ? g.beta / big : 0.0;
  return {small, big};
}

/// Periodic box [0, L_1) x ... x [0, L_d) with power-of-two point counts.
class SpectralGrid {
 public:
  SpectralGrid(std::vector<std::size_t> sizes, std::vector<double> lengths)
      : sizes_(std::move(sizes)), lengths_(std::move(lengths)) {
    if (sizes_.empty() || sizes_.size() > 3)
      throw InvalidArgument("grid dimension must be 1, 2 or 3");
    if (lengths_.size() != sizes_.size())
      throw InvalidArgument("grid needs one box length per axis");
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      const auto s = sizes_[i];
      if (s < 2 || (s & (s - 1)) != 0)
        throw InvalidArgument("grid sizes must be powers of two >= 2, got " + std::to_string(s));
      if (!(lengths_[i] > 0.0) || !std::isfinite(lengths_[i]))
        throw InvalidArgument("box lengths must be positive and finite");
    }
    fft_ = std::make_shared<detail::RealFft>(sizes_);
    cell_weight_ = 1.0;
    for (std::size_t i = 0; i < sizes_.size(); ++i)
      cell_weight_ *= lengths_[i] / static_cast<double>(sizes_[i]);
    build_modes();
  }

  int dim() const noexcept { return static_cast<int>(sizes_.size()); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const std::vector<double>& lengths() const noexcept { return lengths_; }
  std::size_t point_count() const noexcept { return fft_->real_count(); }
  std::size_t mode_count() const noexcept { return fft_->complex_count(); }
  double cell_weight() const noexcept { return cell_weight_; }
  double volume() const noexcept {
    double v = 1.0;
    for (double l : lengths_) v *= l;
    return v;
  }

  /// Eigenvalue t(k) = sum_i (2 pi m_i / L_i)^2 of the positive Laplacian for
  /// every mode of the half-spectrum layout.
  std::span<const double> laplacian_eigenvalues() const noexcept { return t_; }

  /// i k_axis multiplier for spectral differentiation (zero at Nyquist).
  std::span<const double> derivative_wavenumbers(int axis) const { return dk_.at(axis); }

  /// Weight that turns sum_k |u_hat(k)|^2 (full spectrum) into the quadrature
  /// integral of u^2.
  double spectral_weight() const noexcept {
    const double n = static_cast<double>(point_count());
    return volume() / (n * n);
  }

  /// Multiplicity of each half-spectrum mode inside the full spectrum (1 or 2).
  std::span<const double> mode_multiplicity() const noexcept { return mult_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    fft_->forward(in, out);
  }
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    fft_->inverse(in, out);
  }

  /// Grid coordinates (x_1, ..., x_d) of a flat row-major point index.
  std::array<double, 3> coordinates(std::size_t index) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int axis = dim() - 1; axis >= 0; --axis) {
      const auto s = sizes_[axis];
      x[axis] = lengths_[axis] * static_cast<double>(index % s) / static_cast<double>(s);
      index /= s;
    }
    return x;
  }

  std::array<std::size_t, 3> multi_index(std::size_t index) const {
    std::array<std::size_t, 3> m{0, 0, 0};
    for (int axis = dim() - 1; axis >= 0; --axis) {
      m[axis] = index % sizes_[axis];
      index /= sizes_[axis];
    }
    return m;
  }

  std::string signature() const {
    std::ostringstream os;
    os.precision(17);
    os << "d=" << dim() << ";sizes=";
    for (std::size_t i = 0; i < sizes_.size(); ++i) os << (i ? "x" : "") << sizes_[i];
    os << ";L=";
    for (std::size_t i = 0; i < lengths_.size(); ++i) os << (i ? "x" : "") << lengths_[i];
    return os.str();
  }

  friend bool operator==(const SpectralGrid& a, const SpectralGrid& b) {
    return a.sizes_ == b.sizes_ && a.lengths_ == b.lengths_;
  }

 private:
  void build_modes() {
    const int d = dim();
    std::vector<std::size_t> cdims(sizes_);
    cdims.back() = sizes_.back() / 2 + 1;
    const std::size_t count = mode_count();
    t_.assign(count, 0.0);
    mult_.assign(count, 1.0);
    dk_.assign(d, std::vector<double>(count, 0.0));
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t rem = idx;
      double t = 0.0;
      for (int axis = d - 1; axis >= 0; --axis) {
        const std::size_t m = rem % cdims[axis];
        rem /= cdims[axis];
        const auto n = static_cast<long>(sizes_[axis]);
        long signed_m = static_cast<long>(m);
        if (signed_m > n / 2) signed_m -= n;
        const double k = 2.0 * std::numbers::pi * static_cast<double>(signed_m) / lengths_[axis];
        t += k * k;
        dk_[axis][idx] = (2 * signed_m == n) ? 0.0 : k;
        if (axis == d - 1) {
          // The r2c layout stores only m <= n/2 on the last axis; interior
          // modes stand for themselves and their conjugate partner.
          mult_[idx] = (m == 0 || 2 * static_cast<long>(m) == n) ? 1.0 : 2.0;
        }
      }
      t_[idx] = t;
    }
  }

  std::vector<std::size_t> sizes_;
  std::vector<double> lengths_;
  std::shared_ptr<const detail::RealFft> fft_;
  double cell_weight_ = 1.0;
  std::vector<double> t_;
  std::vector<double> mult_;
  std::vector<std::vector<double>> dk_;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

inline GridPtr make_grid(std::vector<std::size_t> sizes, std::vector<double> lengths) {
  return std::make_shared<const SpectralGrid>(std::move(sizes), std::move(lengths));
}

/// Real grid function, row-major over the grid points.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double value = 0.0)
      : grid_(std::move(grid)), values_(grid_->point_count(), value) {}
  ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->point_count())
      throw InvalidArgument("field length does not match the grid point count");
  }

  template <class Fn>
  static ScalarField from_function(GridPtr grid, Fn&& fn) {
    ScalarField f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) f.values_[i] = fn(grid->coordinates(i));
    return f;
  }

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  ScalarField& operator+=(const ScalarField& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  ScalarField& operator*=(double c) {
    for (auto& v : values_) v *= c;
    return *this;
  }
  /// this += c * o
  ScalarField& axpy(double c, const ScalarField& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * o.values_[i];
    return *this;
  }

  void check_same_grid(const ScalarField& o) const {
    if (grid_ != o.grid_ && !(grid_ && o.grid_ && *grid_ == *o.grid_))
      throw GridMismatch("fields live on different grids");
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double c, ScalarField a) { return a *= c; }

template <class Fn>
ScalarField map(const ScalarField& u, Fn&& fn) {
  ScalarField out(u.grid_ptr());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = fn(u[i]);
  return out;
}

template <class Fn>
ScalarField zip(const ScalarField& a, const ScalarField& b, Fn&& fn) {
  a.check_same_grid(b);
  ScalarField out(a.grid_ptr());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

inline double min_value(const ScalarField& u) {
  return *std::min_element(u.values().begin(), u.values().end());
}
inline double max_value(const ScalarField& u) {
  return *std::max_element(u.values().begin(), u.values().end());
}
inline double sup_norm(const ScalarField& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}
inline double sup_distance(const ScalarField& a, const ScalarField& b) {
  a.check_same_grid(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Quadrature integral sum_x u(x) * cell_weight.
inline double integrate(const ScalarField& u) {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return s * u.grid().cell_weight();
}

/// Quadrature inner product <u, v>.
inline double inner(const ScalarField& u, const ScalarField& v) {
  u.check_same_grid(v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s * u.grid().cell_weight();
}

/// Discrete L^r norm (r >= 1) with quadrature weights; r = inf gives sup norm.
inline double lp_norm(const ScalarField& u, double r) {
  if (std::isinf(r)) return sup_norm(u);
  double s = 0.0;
  for (double v : u.values()) s += std::pow(std::abs(v), r);
  return std::pow(s * u.grid().cell_weight(), 1.0 / r);
}

/// Pointwise |grad psi|^2 by spectral differentiation (a sum of squares, so
/// the result is >= 0 without clamping).
inline ScalarField gradient_squared(const ScalarField& psi) {
  if (!psi.all_finite()) throw InvalidArgument("gradient_squared: non-finite input");
  const SpectralGrid& grid = psi.grid();
  std::vector<std::complex<double>> hat(grid.mode_count());
  grid.forward(psi.values(), hat);
  ScalarField out(psi.grid_ptr(), 0.0);
  std::vector<std::complex<double>> dhat(grid.mode_count());
  std::vector<double> deriv(grid.point_count());
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const auto k = grid.derivative_wavenumbers(axis);
    for (std::size_t m = 0; m < hat.size(); ++m) dhat[m] = std::complex<double>(0.0, k[m]) * hat[m];
    grid.inverse(dhat, deriv);
    for (std::size_t i = 0; i < deriv.size(); ++i) out[i] += deriv[i] * deriv[i];
  }
  return out;
}

}  // namespace paneitz
