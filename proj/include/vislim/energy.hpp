#pragma once

// Energy quantities of the compressible system.

#include <cmath>

#include "vislim/spectral.hpp"
#include "vislim/thermo.hpp"

namespace vislim {

/// int (rho |v|^2 / 2 + e(rho)) dx, the quantity controlled by the basic
/// energy inequality.
inline double physical_energy(const Field2D& rho, const VectorField2D& v, const PressureLaw& law) {
  require_same_grid(rho.grid(), v.grid());
  const int n = rho.n();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = rho(i, j);
      if (!(r > 0.0)) throw NonpositiveDensity(i, j, r, "physical_energy");
      const double vx = v.x(i, j);
      const double vy = v.y(i, j);
      s += 0.5 * r * (vx * vx + vy * vy) + law.internal_energy(r);
    }
  }
  return s * rho.grid().cell_area();
}

/// int eta |u|^2 / 2 dx.
inline double kinetic_energy(const Field2D& eta, const VectorField2D& u) {
  require_same_grid(eta.grid(), u.grid());
  const auto e = eta.values();
  const auto a = u.x.values();
  const auto b = u.y.values();
  double s = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) s += 0.5 * e[k] * (a[k] * a[k] + b[k] * b[k]);
  return s * eta.grid().cell_area();
}

/// Viscous dissipation rate ||grad v||_2^2 + nu ||div v||_2^2 (mu = 1).
inline double dissipation_rate(const VectorSpectrum& v_hat, double nu) {
  const double grad = gradient_norm_squared(v_hat.x) + gradient_norm_squared(v_hat.y);
  return grad + nu * l2_norm_squared(divergence(v_hat));
}

/// Term-by-term value of
///   E(v, rho) = int (rho|v|^2 + 2 e(rho) + |grad v|^2 + nu (div v)^2 - 2 P(rho) div v) dx.
struct EnergyFunctionalTerms {
  double kinetic = 0.0;
  double potential = 0.0;
  double gradient = 0.0;
  double bulk = 0.0;
  double coupling = 0.0;
  double total() const { return kinetic + potential + gradient + bulk + coupling; }
};

inline EnergyFunctionalTerms energy_functional_terms(const Field2D& rho, const VectorField2D& v, double nu,
                                                     const PressureLaw& law) {
  require_same_grid(rho.grid(), v.grid());
  const auto v_hat = forward(v);
  const Field2D div = inverse(divergence(v_hat));
  EnergyFunctionalTerms t;
  const int n = rho.n();
  double kin = 0.0;
  double pot = 0.0;
  double bulk = 0.0;
  double coup = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = rho(i, j);
      if (!(r > 0.0)) throw NonpositiveDensity(i, j, r, "energy_functional");
      const double vx = v.x(i, j);
      const double vy = v.y(i, j);
      const double d = div(i, j);
      kin += r * (vx * vx + vy * vy);
      pot += 2.0 * law.internal_energy(r);
      bulk += d * d;
      coup += -2.0 * law.pressure(r) * d;
    }
  }
  const double h2 = rho.grid().cell_area();
  t.kinetic = kin * h2;
  t.potential = pot * h2;
  t.gradient = gradient_norm_squared(v_hat.x) + gradient_norm_squared(v_hat.y);
  t.bulk = nu * bulk * h2;
  t.coupling = coup * h2;
  return t;
}

inline double energy_functional(const Field2D& rho, const VectorField2D& v, double nu, const PressureLaw& law) {
  return energy_functional_terms(rho, v, nu, law).total();
}

/// ||v||_{H^1}^2 + ||rho - rho_bar||_2^2 + nu ||div v||_2^2, the norm E is
/// equivalent to.
inline double energy_norm_squared(const Field2D& rho, const VectorField2D& v, double nu, double rho_bar) {
  const auto v_hat = forward(v);
  Field2D dev = rho;
  dev += -rho_bar;
  const double d = lp_norm(dev, 2.0);
  return h1_norm_squared(v_hat.x) + h1_norm_squared(v_hat.y) + d * d +
         nu * l2_norm_squared(divergence(v_hat));
}

}  // namespace vislim
