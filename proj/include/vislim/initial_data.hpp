#pragma once

// Seeded initial-data generators. The same seed gives bit-identical fields on
// every platform: the generator is mt19937_64 and uniforms are built from its
// raw output rather than through a distribution object.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "vislim/error.hpp"
#include "vislim/helmholtz.hpp"
#include "vislim/spectral.hpp"

namespace vislim {

struct InitialDataSpec {
  std::string generator = "band-limited";
  double rho_bar = 1.0;
  /// max |rho0 - rho_bar|
  double rho_amplitude = 0.2;
  /// ||v0||_{H^1}
  double velocity_h1 = 4.0;
  /// Highest wavenumber (max norm) in the random fields.
  int max_mode = 4;
  std::uint64_t seed = 1;
};

struct InitialData {
  Field2D rho;
  VectorField2D v;
};

namespace detail {

class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : gen_(seed) {}
  /// Uniform on [0, 1) with 53 random bits.
  double next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * next() - 1.0; }

 private:
  std::mt19937_64 gen_;
};

/// Real random field with modes 1 <= |k|_inf <= max_mode and coefficients
/// decaying like 1/(1 + |k|^2).
inline Field2D random_band_limited(const Grid& g, int max_mode, UniformSource& rng) {
  if (max_mode < 1 || max_mode > g.dealias_cutoff()) {
    throw InvalidArgument("max_mode must lie in [1, n/3]");
  }
  Spectrum s(g);
  for (int k1 = -max_mode; k1 <= max_mode; ++k1) {
    for (int k2 = 0; k2 <= max_mode; ++k2) {
      if (k2 == 0 && k1 <= 0) continue;
      const double a = rng.symmetric();
      const double b = rng.symmetric();
      const double decay = 1.0 / (1.0 + k1 * k1 + k2 * k2);
      const int i = k1 >= 0 ? k1 : g.n() + k1;
      s(i, k2) = complex{a, b} * decay;
    }
  }
  enforce_hermitian(s);
  return inverse(s);
}

}  // namespace detail

/// rho_bar + A b / max|b| with b a random band-limited field.
inline Field2D band_limited_density(const Grid& g, const InitialDataSpec& spec, detail::UniformSource& rng) {
  Field2D b = detail::random_band_limited(g, spec.max_mode, rng);
  const double m = lp_norm(b, std::numeric_limits<double>::infinity());
  b *= spec.rho_amplitude / m;
  b += spec.rho_bar;
  return b;
}

/// P(random band-limited field) rescaled to the requested H^1 norm.
inline VectorField2D solenoidal_velocity(const Grid& g, const InitialDataSpec& spec, detail::UniformSource& rng) {
  Field2D a = detail::random_band_limited(g, spec.max_mode, rng);
  Field2D b = detail::random_band_limited(g, spec.max_mode, rng);
  VectorSpectrum w = p_project(forward(VectorField2D{std::move(a), std::move(b)}));
  // Drop the mean so the field has no uniform drift.
  w.x(0, 0) = 0.0;
  w.y(0, 0) = 0.0;
  const double h1 = std::sqrt(h1_norm_squared(w.x) + h1_norm_squared(w.y));
  if (h1 == 0.0) throw DegenerateInput("random velocity vanished");
  w *= complex{spec.velocity_h1 / h1, 0.0};
  return inverse(w);
}

/// Generators:
///   band-limited  random density bump and solenoidal velocity (the sweep data)
///   taylor-green  rho = rho_bar, v = (sin x1 cos x2, -cos x1 sin x2) scaled to velocity_h1
///   constant      rho = rho_bar, v = 0
///   acoustic      rho = rho_bar + A cos x1, v = 0
inline InitialData make_initial_data(const Grid& g, const InitialDataSpec& spec) {
  if (!(spec.rho_bar > 0.0)) throw InvalidArgument("rho_bar must be positive");
  if (!(spec.rho_amplitude >= 0.0 && spec.rho_amplitude < spec.rho_bar)) {
    throw InvalidArgument("rho_amplitude must lie in [0, rho_bar)");
  }
  if (spec.generator == "band-limited") {
    detail::UniformSource rng(spec.seed);
    Field2D rho = band_limited_density(g, spec, rng);
    VectorField2D v = solenoidal_velocity(g, spec, rng);
    return {std::move(rho), std::move(v)};
  }
  if (spec.generator == "taylor-green") {
    VectorField2D v{Field2D::sample(g, [](double x1, double x2) { return std::sin(x1) * std::cos(x2); }),
                    Field2D::sample(g, [](double x1, double x2) { return -std::cos(x1) * std::sin(x2); })};
    if (spec.velocity_h1 > 0.0) v *= spec.velocity_h1 / h1_norm(v);
    return {Field2D(g, spec.rho_bar), std::move(v)};
  }
  if (spec.generator == "constant") return {Field2D(g, spec.rho_bar), VectorField2D(g)};
  if (spec.generator == "acoustic") {
    const double a = spec.rho_amplitude;
    const double rb = spec.rho_bar;
    return {Field2D::sample(g, [a, rb](double x1, double) { return rb + a * std::cos(x1); }), VectorField2D(g)};
  }
  throw InvalidArgument("unknown initial-data generator '" + spec.generator + "'");
}

}  // namespace vislim
