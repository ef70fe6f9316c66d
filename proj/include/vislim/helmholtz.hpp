#pragma once

// Helmholtz projectors on the torus:
//   Q v = -grad (-Delta)^{-1} div v   (potential part)
//   P v = v - Q v                     (solenoidal part, keeps the mean)

#include "vislim/spectral.hpp"

namespace vislim {

/// Mode k != 0 maps to (k k^T / |k|^2) v_k. Uses the same wavenumbers as the
/// first derivative so that div(P v) vanishes exactly.
inline VectorSpectrum q_project(const VectorSpectrum& v) {
  const Grid& g = v.grid();
  VectorSpectrum out(g);
  for (int i = 0; i < g.n(); ++i) {
    const double k1 = g.odd_wavenumber(i);
    for (int j = 0; j < g.half(); ++j) {
      const double k2 = g.odd_wavenumber(j);
      const double kk = k1 * k1 + k2 * k2;
      if (kk == 0.0) continue;
      const complex dot = (k1 * v.x(i, j) + k2 * v.y(i, j)) / kk;
      out.x(i, j) = k1 * dot;
      out.y(i, j) = k2 * dot;
    }
  }
  return out;
}

inline VectorSpectrum p_project(const VectorSpectrum& v) {
  VectorSpectrum q = q_project(v);
  return {v.x - q.x, v.y - q.y};
}

inline VectorField2D q_project(const VectorField2D& v) { return inverse(q_project(forward(v))); }

inline VectorField2D p_project(const VectorField2D& v) { return v - q_project(v); }

}  // namespace vislim
