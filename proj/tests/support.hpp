#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "vislim/initial_data.hpp"
#include "vislim/spectral.hpp"

namespace vislim::test {

inline Field2D random_field(const Grid& g, std::uint64_t seed, int max_mode = 5) {
  detail::UniformSource rng(seed);
  return detail::random_band_limited(g, max_mode, rng);
}

inline VectorField2D random_vector(const Grid& g, std::uint64_t seed, int max_mode = 5) {
  detail::UniformSource rng(seed);
  Field2D a = detail::random_band_limited(g, max_mode, rng);
  Field2D b = detail::random_band_limited(g, max_mode, rng);
  return {std::move(a), std::move(b)};
}

inline double max_abs_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

inline double max_abs_diff(const VectorField2D& a, const VectorField2D& b) {
  return std::max(max_abs_diff(a.x, b.x), max_abs_diff(a.y, b.y));
}

inline double max_abs(const Field2D& a) { return max_abs_diff(a, Field2D(a.grid())); }

/// Full n x n coefficient array by direct summation, independent of FFTW.
/// Entry (p, q) holds the coefficient of exp(i (k1 x1 + k2 x2)) with
/// k1 = p, k2 = q taken modulo n.
inline std::vector<std::complex<double>> naive_dft(const Field2D& f) {
  const int n = f.n();
  std::vector<std::complex<double>> c(static_cast<std::size_t>(n) * n);
  const double h = kTwoPi / n;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      std::complex<double> s{};
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) s += f(i, j) * std::polar(1.0, -h * (p * i + q * j));
      }
      c[static_cast<std::size_t>(p) * n + q] = s / static_cast<double>(n * n);
    }
  }
  return c;
}

/// Pseudo-spectral RK4 solve of rho_t + div(rho v) = 0 for a time-frozen v
/// given as functions; the oracle for the characteristics solver.
template <class V1, class V2, class R0>
Field2D spectral_continuity_solve(const Grid& g, V1 v1, V2 v2, R0 rho0, double t, double dt) {
  const Field2D a = Field2D::sample(g, v1);
  const Field2D b = Field2D::sample(g, v2);
  auto rhs = [&](const Field2D& rho) {
    return -divergence(VectorField2D{pointwise_product(rho, a), pointwise_product(rho, b)});
  };
  Field2D rho = Field2D::sample(g, rho0);
  const int steps = static_cast<int>(std::lround(t / dt));
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    const Field2D k1 = rhs(rho);
    const Field2D k2 = rhs(rho + k1 * (0.5 * h));
    const Field2D k3 = rhs(rho + k2 * (0.5 * h));
    const Field2D k4 = rhs(rho + k3 * h);
    rho += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
  }
  return rho;
}

/// L2 distance on the torus between a coarse field and a finer one sampled
/// at the coincident grid points.
inline double l2_distance_on_coarse(const Field2D& coarse, const Field2D& fine) {
  const int n = coarse.n();
  const int r = fine.n() / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = coarse(i, j) - fine(r * i, r * j);
      s += d * d;
    }
  }
  return std::sqrt(s * coarse.grid().cell_area());
}

}  // namespace vislim::test
