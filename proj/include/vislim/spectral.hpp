#pragma once

// Torus grid, real fields, Fourier transforms and the spectral operators
// every other module is built on. The domain is [0, 2*pi)^2 so wavenumbers
// are integers; all integrals carry the (2*pi)^2 measure.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vislim/error.hpp"

namespace vislim {

using complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kTorusMeasure = kTwoPi * kTwoPi;

/// Uniform n x n sampling of the torus [0, 2*pi)^2.
///
/// Sample (i, j) sits at x1 = 2*pi*i/n, x2 = 2*pi*j/n. Spectral storage is the
/// real-to-complex half plane: row index i carries k1 in {-n/2+1, ..., n/2},
/// column index j carries k2 in {0, ..., n/2}.
class Grid {
 public:
  explicit Grid(int n) : n_(n) {
    if (n < 16 || n % 2 != 0) {
      throw InvalidArgument("grid size must be even and >= 16, got " + std::to_string(n));
    }
  }

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  int half() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * half(); }
  double spacing() const { return kTwoPi / n_; }
  double coordinate(int i) const { return spacing() * i; }
  /// Quadrature weight of one sample.
  double cell_area() const { return spacing() * spacing(); }

  /// Wavenumber carried by row index i (or column index, which is never
  /// above n/2).
  int wavenumber(int index) const { return index <= n_ / 2 ? index : index - n_; }

  /// Wavenumber used by odd-order derivatives: the Nyquist mode has no
  /// well-defined sign on a real grid and is mapped to zero.
  int odd_wavenumber(int index) const {
    const int k = wavenumber(index);
    return std::abs(k) == n_ / 2 ? 0 : k;
  }

  /// Largest |k| kept by the 2/3 dealiasing rule.
  int dealias_cutoff() const { return n_ / 3; }

  bool operator==(const Grid&) const = default;

 private:
  int n_;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw GridMismatch(a.n(), b.n());
}

/// Real scalar field sampled on a Grid (physical view).
class Field2D {
 public:
  explicit Field2D(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}

  Field2D(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidArgument("field value count does not match grid");
    }
  }

  /// Samples f(x1, x2) at every grid point.
  template <class F>
  static Field2D sample(Grid grid, F&& f) {
    Field2D out(grid);
    const int n = grid.n();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(i, j) = f(grid.coordinate(i), grid.coordinate(j));
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  int n() const { return grid_.n(); }

  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }
  /// Quadrature of the field over the torus.
  double integral() const { return mean() * kTorusMeasure; }

  template <class F>
  Field2D map(F&& f) const {
    Field2D out(grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = f(values_[k]);
    return out;
  }

  Field2D& operator+=(const Field2D& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  Field2D& operator-=(const Field2D& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  Field2D& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  Field2D& operator+=(double s) {
    for (double& v : values_) v += s;
    return *this;
  }

  friend Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
  friend Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
  friend Field2D operator*(Field2D a, double s) { return a *= s; }
  friend Field2D operator*(double s, Field2D a) { return a *= s; }
  friend Field2D operator-(Field2D a) { return a *= -1.0; }

  bool operator==(const Field2D&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * grid_.n() + static_cast<std::size_t>(j);
  }

  Grid grid_;
  std::vector<double> values_;
};

/// Pointwise (aliased) product; nonlinear terms should use dealiased_product.
inline Field2D pointwise_product(const Field2D& a, const Field2D& b) {
  require_same_grid(a.grid(), b.grid());
  Field2D out(a.grid());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = x[k] * y[k];
  return out;
}

/// Fourier coefficients of a real field, normalised so that
/// f(x) = sum_k c_k exp(i k.x). Half-plane storage, see Grid.
class Spectrum {
 public:
  explicit Spectrum(Grid grid) : grid_(grid), coeffs_(grid.spectral_size(), complex{}) {}

  const Grid& grid() const { return grid_; }
  int n() const { return grid_.n(); }
  int half() const { return grid_.half(); }

  complex& operator()(int i, int j) { return coeffs_[index(i, j)]; }
  const complex& operator()(int i, int j) const { return coeffs_[index(i, j)]; }

  std::span<complex> coeffs() { return coeffs_; }
  std::span<const complex> coeffs() const { return coeffs_; }
  complex* data() { return coeffs_.data(); }
  const complex* data() const { return coeffs_.data(); }

  /// Multiplies every mode by m(k1, k2).
  template <class M>
  Spectrum& apply(M&& m) {
    const int n = grid_.n();
    for (int i = 0; i < n; ++i) {
      const int k1 = grid_.wavenumber(i);
      for (int j = 0; j < half(); ++j) (*this)(i, j) *= m(k1, j);
    }
    return *this;
  }

  Spectrum& operator+=(const Spectrum& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    return *this;
  }
  Spectrum& operator-=(const Spectrum& o) {
    require_same_grid(grid_, o.grid_);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
    return *this;
  }
  Spectrum& operator*=(complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
  friend Spectrum operator-(Spectrum a, const Spectrum& b) { return a -= b; }
  friend Spectrum operator*(Spectrum a, complex s) { return a *= s; }
  friend Spectrum operator*(complex s, Spectrum a) { return a *= s; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * grid_.half() + static_cast<std::size_t>(j);
  }

  Grid grid_;
  std::vector<complex> coeffs_;
};

/// Multiplicity of a stored half-plane mode in full-plane sums.
inline double mode_weight(const Grid& g, int j) { return (j == 0 || j == g.n() / 2) ? 1.0 : 2.0; }

namespace detail {

// FFTW plans are created once per grid size. Planning is serialised; the
// new-array execute functions are thread-safe, so a plan is shared freely.
class FftPlans {
 public:
  explicit FftPlans(int n) {
    std::vector<double> real(static_cast<std::size_t>(n) * n);
    std::vector<complex> spec(static_cast<std::size_t>(n) * (n / 2 + 1));
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c_2d(n, n, real.data(), c, flags);
    inverse_ = fftw_plan_dft_c2r_2d(n, n, c, real.data(), flags);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  fftw_plan forward() const { return forward_; }
  fftw_plan inverse() const { return inverse_; }

 private:
  fftw_plan forward_;
  fftw_plan inverse_;
};

inline const FftPlans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<FftPlans>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlans>(n);
  return *slot;
}

}  // namespace detail

/// Physical -> spectral.
inline Spectrum forward(const Field2D& f) {
  const Grid& g = f.grid();
  Spectrum out(g);
  // r2c leaves its input intact only as an option; work on a copy.
  std::vector<double> in(f.values().begin(), f.values().end());
  fftw_execute_dft_r2c(detail::plans_for(g.n()).forward(), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& c : out.coeffs()) c *= scale;
  return out;
}

/// Spectral -> physical. The spectrum is assumed Hermitian.
inline Field2D inverse(const Spectrum& s) {
  const Grid& g = s.grid();
  Field2D out(g);
  std::vector<complex> in(s.coeffs().begin(), s.coeffs().end());
  fftw_execute_dft_c2r(detail::plans_for(g.n()).inverse(), reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  return out;
}

/// Restores Hermitian symmetry on the self-conjugate columns (k2 = 0 and
/// k2 = n/2) after coefficients were written by hand.
inline void enforce_hermitian(Spectrum& s) {
  const int n = s.n();
  for (int j : {0, n / 2}) {
    for (int i = 1; i < n / 2; ++i) {
      const complex avg = 0.5 * (s(i, j) + std::conj(s(n - i, j)));
      s(i, j) = avg;
      s(n - i, j) = std::conj(avg);
    }
    s(0, j) = s(0, j).real();
    s(n / 2, j) = s(n / 2, j).real();
  }
}

/// 2/3 rule: zeroes every mode with |k1| > n/3 or |k2| > n/3.
inline void truncate(Spectrum& s) {
  const Grid& g = s.grid();
  const int cut = g.dealias_cutoff();
  for (int i = 0; i < g.n(); ++i) {
    const bool row_out = std::abs(g.wavenumber(i)) > cut;
    for (int j = 0; j < g.half(); ++j) {
      if (row_out || j > cut) s(i, j) = complex{};
    }
  }
}

inline Spectrum truncated(Spectrum s) {
  truncate(s);
  return s;
}

/// (i k)^order along one axis (1 or 2).
inline complex derivative_multiplier(const Grid& g, int k1, int j, int axis, int order) {
  const int row_index = k1 < 0 ? k1 + g.n() : k1;
  const bool odd = order % 2 == 1;
  const double k = axis == 1 ? (odd ? g.odd_wavenumber(row_index) : k1)
                             : (odd ? g.odd_wavenumber(j) : j);
  complex m{1.0, 0.0};
  for (int r = 0; r < order; ++r) m *= complex{0.0, k};
  return m;
}

inline Spectrum derivative(Spectrum s, int axis, int order = 1) {
  if (axis != 1 && axis != 2) throw InvalidArgument("derivative axis must be 1 or 2");
  if (order < 1) throw InvalidArgument("derivative order must be positive");
  const Grid g = s.grid();
  s.apply([&](int k1, int j) { return derivative_multiplier(g, k1, j, axis, order); });
  return s;
}

/// Exact spectral derivative: mode k multiplied by (i k_axis)^order.
inline Field2D derivative(const Field2D& f, int axis, int order = 1) {
  return inverse(derivative(forward(f), axis, order));
}

inline Spectrum laplacian(Spectrum s) {
  s.apply([](int k1, int k2) { return complex{-static_cast<double>(k1 * k1 + k2 * k2), 0.0}; });
  return s;
}

inline Field2D laplacian(const Field2D& f) { return inverse(laplacian(forward(f))); }

/// Zero-mean inverse Laplacian; the k = 0 mode is set to zero.
inline Spectrum inverse_laplacian(Spectrum s) {
  s.apply([](int k1, int k2) {
    const int k2sum = k1 * k1 + k2 * k2;
    return k2sum == 0 ? complex{} : complex{-1.0 / k2sum, 0.0};
  });
  return s;
}

namespace detail {
/// trunc(F(a)), for a pointwise expression of band-limited fields.
inline Spectrum band_limited(const Field2D& a) { return truncated(forward(a)); }
}  // namespace detail

/// Applies the 2/3 filter to a physical field.
inline Field2D dealias(const Field2D& f) { return inverse(truncated(forward(f))); }

/// Product with the 2/3 rule applied to both inputs and to the output.
inline Field2D dealiased_product(const Field2D& f, const Field2D& g) {
  require_same_grid(f.grid(), g.grid());
  const Field2D a = dealias(f);
  const Field2D b = dealias(g);
  return inverse(truncated(forward(pointwise_product(a, b))));
}

/// Grid quadrature of the L_p norm; p = infinity gives the max norm.
inline double lp_norm(const Field2D& f, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("lp_norm exponent must be >= 1");
  const auto v = f.values();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  if (p == 2.0) {
    for (double x : v) s += x * x;
    return std::sqrt(s * f.grid().cell_area());
  }
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s * f.grid().cell_area(), 1.0 / p);
}

/// L2 inner product over the torus.
inline double l2_inner(const Field2D& f, const Field2D& g) {
  require_same_grid(f.grid(), g.grid());
  double s = 0.0;
  const auto a = f.values();
  const auto b = g.values();
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s * f.grid().cell_area();
}

/// Weighted Parseval sum (2*pi)^2 * sum_k w(k) |c_k|^2 over the full plane.
template <class W>
double weighted_energy(const Spectrum& s, W&& w) {
  const Grid& g = s.grid();
  double acc = 0.0;
  for (int i = 0; i < g.n(); ++i) {
    const int k1 = g.wavenumber(i);
    for (int j = 0; j < g.half(); ++j) acc += mode_weight(g, j) * w(k1, j) * std::norm(s(i, j));
  }
  return acc * kTorusMeasure;
}

inline double l2_norm_squared(const Spectrum& s) {
  return weighted_energy(s, [](int, int) { return 1.0; });
}

/// Bessel-potential multiplier (1 + |k|^2)^(s/2).
inline Spectrum bessel_potential(Spectrum spec, double s) {
  if (s == 0.0) return spec;
  spec.apply([s](int k1, int k2) {
    return complex{std::pow(1.0 + static_cast<double>(k1 * k1 + k2 * k2), 0.5 * s), 0.0};
  });
  return spec;
}

/// Norm of (1 + |k|^2)^(s/2) f in L_q; stands in for W^s_q.
inline double bessel_norm(const Field2D& f, double s, double q) {
  if (s == 0.0) return lp_norm(f, q);
  return lp_norm(inverse(bessel_potential(forward(f), s)), q);
}

/// Vector field with two components on one grid.
struct VectorField2D {
  Field2D x;
  Field2D y;

  VectorField2D(Field2D x_component, Field2D y_component)
      : x(std::move(x_component)), y(std::move(y_component)) {
    require_same_grid(x.grid(), y.grid());
  }
  explicit VectorField2D(Grid grid) : x(grid), y(grid) {}

  const Grid& grid() const { return x.grid(); }
  const Field2D& operator[](int axis) const { return axis == 1 ? x : y; }
  Field2D& operator[](int axis) { return axis == 1 ? x : y; }

  VectorField2D& operator+=(const VectorField2D& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  VectorField2D& operator-=(const VectorField2D& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  VectorField2D& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend VectorField2D operator+(VectorField2D a, const VectorField2D& b) { return a += b; }
  friend VectorField2D operator-(VectorField2D a, const VectorField2D& b) { return a -= b; }
  friend VectorField2D operator*(VectorField2D a, double s) { return a *= s; }
  friend VectorField2D operator*(double s, VectorField2D a) { return a *= s; }

  bool operator==(const VectorField2D&) const = default;
};

/// Spectra of both components.
struct VectorSpectrum {
  Spectrum x;
  Spectrum y;

  explicit VectorSpectrum(Grid grid) : x(grid), y(grid) {}
  VectorSpectrum(Spectrum a, Spectrum b) : x(std::move(a)), y(std::move(b)) {}
  const Grid& grid() const { return x.grid(); }

  VectorSpectrum& operator+=(const VectorSpectrum& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  VectorSpectrum& operator-=(const VectorSpectrum& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  VectorSpectrum& operator*=(complex s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend VectorSpectrum operator+(VectorSpectrum a, const VectorSpectrum& b) { return a += b; }
  friend VectorSpectrum operator-(VectorSpectrum a, const VectorSpectrum& b) { return a -= b; }
  friend VectorSpectrum operator*(VectorSpectrum a, complex s) { return a *= s; }
  friend VectorSpectrum operator*(complex s, VectorSpectrum a) { return a *= s; }
};

inline VectorSpectrum truncated(VectorSpectrum v) {
  truncate(v.x);
  truncate(v.y);
  return v;
}

inline VectorSpectrum forward(const VectorField2D& v) { return {forward(v.x), forward(v.y)}; }
inline VectorField2D inverse(const VectorSpectrum& s) { return {inverse(s.x), inverse(s.y)}; }

inline VectorSpectrum gradient(const Spectrum& s) { return {derivative(s, 1), derivative(s, 2)}; }
inline VectorField2D gradient(const Field2D& f) { return inverse(gradient(forward(f))); }

inline Spectrum divergence(const VectorSpectrum& v) { return derivative(v.x, 1) + derivative(v.y, 2); }
inline Field2D divergence(const VectorField2D& v) { return inverse(divergence(forward(v))); }

inline Field2D magnitude(const VectorField2D& v) {
  Field2D out(v.grid());
  auto o = out.values();
  auto a = v.x.values();
  auto b = v.y.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = std::hypot(a[k], b[k]);
  return out;
}

/// L_p norm of the pointwise Euclidean magnitude.
inline double lp_norm(const VectorField2D& v, double p) {
  if (p == 2.0) {
    const double a = lp_norm(v.x, 2.0);
    const double b = lp_norm(v.y, 2.0);
    return std::sqrt(a * a + b * b);
  }
  return lp_norm(magnitude(v), p);
}

inline double l2_inner(const VectorField2D& a, const VectorField2D& b) {
  return l2_inner(a.x, b.x) + l2_inner(a.y, b.y);
}

inline double bessel_norm(const VectorField2D& v, double s, double q) {
  if (s == 0.0) return lp_norm(v, q);
  const VectorField2D w{inverse(bessel_potential(forward(v.x), s)),
                        inverse(bessel_potential(forward(v.y), s))};
  return lp_norm(w, q);
}

/// ||f||_{H^1}^2 = ||f||_2^2 + ||grad f||_2^2, computed spectrally.
inline double h1_norm_squared(const Spectrum& s) {
  return weighted_energy(s, [](int k1, int k2) { return 1.0 + k1 * k1 + k2 * k2; });
}

/// ||grad f||_2^2.
inline double gradient_norm_squared(const Spectrum& s) {
  return weighted_energy(s, [](int k1, int k2) { return static_cast<double>(k1 * k1 + k2 * k2); });
}

/// ||grad^2 f||_2^2 (sum over all second derivatives).
inline double hessian_norm_squared(const Spectrum& s) {
  return weighted_energy(s, [](int k1, int k2) {
    const double k = static_cast<double>(k1 * k1 + k2 * k2);
    return k * k;
  });
}

inline double h1_norm(const VectorField2D& v) {
  const auto s = forward(v);
  return std::sqrt(h1_norm_squared(s.x) + h1_norm_squared(s.y));
}

inline double h1_norm(const Field2D& f) { return std::sqrt(h1_norm_squared(forward(f))); }

}  // namespace vislim
