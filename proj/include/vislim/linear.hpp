#pragma once

// Dispersion analysis of the linearisation about (rho_bar, 0):
//
//   eta_t + rho_bar div v = 0
//   rho_bar v_t - Delta v - nu grad div v + P'(rho_bar) grad eta = 0
//
// Per wavevector the potential part obeys lambda^2 + b lambda + c = 0 with
// b = (1 + nu)|k|^2 / rho_bar and c = P'(rho_bar)|k|^2; the solenoidal part
// decays like exp(-|k|^2 t / rho_bar) whatever nu is.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "vislim/error.hpp"
#include "vislim/spectral.hpp"

namespace vislim {

/// Roots of one per-mode quadratic. lambda_plus has the smaller |Re| (the slow
/// branch); for complex pairs it is the root with positive imaginary part.
struct ModePair {
  double k2 = 0.0;
  complex lambda_plus;
  complex lambda_minus;
};

/// Coefficients of the linearisation; the defaults are rho_bar = P'(rho_bar) = 1.
struct LinearCoefficients {
  double rho_bar = 1.0;
  double sound_speed_sq = 1.0;
};

/// Roots of lambda^2 + b lambda + c = 0 (b >= 0, c > 0), ordered as in ModePair.
inline ModePair quadratic_roots(double k2, double b, double c) {
  ModePair out;
  out.k2 = k2;
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) {
    const double q = -0.5 * (b + std::sqrt(disc));
    out.lambda_minus = q;
    out.lambda_plus = q != 0.0 ? c / q : 0.0;
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    out.lambda_plus = complex{-0.5 * b, im};
    out.lambda_minus = complex{-0.5 * b, -im};
  }
  return out;
}

inline ModePair linearized_roots(double k2, double nu, const LinearCoefficients& coef) {
  if (!(k2 > 0.0)) throw InvalidArgument("dispersion roots need |k|^2 > 0");
  if (!(nu >= 0.0)) throw InvalidArgument("volume viscosity must be nonnegative");
  return quadratic_roots(k2, (1.0 + nu) * k2 / coef.rho_bar, coef.sound_speed_sq * k2);
}

/// lambda^2 + (1 + nu) k2 lambda + k2 = 0.
inline ModePair dispersion_roots(double k2, double nu) { return linearized_roots(k2, nu, {}); }

/// lambda^2 + (1 + nu) k2 lambda + k2 / eps^2 = 0 (low Mach scaling).
inline ModePair low_mach_roots(double k2, double nu, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("Mach parameter must be positive");
  if (!(k2 > 0.0)) throw InvalidArgument("dispersion roots need |k|^2 > 0");
  return quadratic_roots(k2, (1.0 + nu) * k2, k2 / (epsilon * epsilon));
}

/// Fourier amplitudes of one wavevector: (eta_k, v1_k, v2_k).
struct LinearMode {
  int k1 = 0;
  int k2 = 0;
  complex eta;
  complex v1;
  complex v2;
};

namespace detail {

// exp(A t) = c0 I + c1 A for a 2x2 complex matrix. The eigenvalues are
// computed without cancellation so the slow root stays accurate at large nu.
inline std::array<complex, 4> expm2(const std::array<complex, 4>& a, double t) {
  const complex tr = a[0] + a[3];
  const complex det = a[0] * a[3] - a[1] * a[2];
  complex root = std::sqrt(tr * tr - 4.0 * det);
  if ((std::conj(tr) * root).real() < 0.0) root = -root;
  const complex l1 = 0.5 * (tr + root);
  const complex l2 = l1 != 0.0 ? det / l1 : tr - l1;
  const complex e1 = std::exp(l1 * t);
  const complex e2 = std::exp(l2 * t);
  complex c0;
  complex c1;
  const complex gap = l1 - l2;
  if (std::abs(gap * t) < 1e-4) {
    // Near-degenerate: expand around the mean eigenvalue.
    const complex m = 0.5 * tr;
    const complex st = 0.5 * gap * t;
    const complex em = std::exp(m * t);
    c1 = em * t * (1.0 + st * st / 6.0);
    c0 = em * (1.0 + st * st / 2.0) - c1 * m;
  } else {
    c1 = (e1 - e2) / gap;
    c0 = (l1 * e2 - l2 * e1) / gap;
  }
  return {c0 + c1 * a[0], c1 * a[1], c1 * a[2], c0 + c1 * a[3]};
}

}  // namespace detail

/// Exact evolution of the per-mode 3x3 linear system over time t.
inline LinearMode evolve_linear(const LinearMode& mode, double nu, double t, const LinearCoefficients& coef = {}) {
  const double kk = static_cast<double>(mode.k1 * mode.k1 + mode.k2 * mode.k2);
  if (kk == 0.0) return mode;
  const double kn = std::sqrt(kk);
  const double e1 = mode.k1 / kn;
  const double e2 = mode.k2 / kn;
  const complex par = e1 * mode.v1 + e2 * mode.v2;
  const complex perp = -e2 * mode.v1 + e1 * mode.v2;
  const complex I{0.0, 1.0};
  const double rb = coef.rho_bar;
  // d/dt (eta, v_par) = A (eta, v_par)
  const std::array<complex, 4> a = {0.0, -I * rb * kn, -I * coef.sound_speed_sq * kn / rb, -(1.0 + nu) * kk / rb};
  const auto e = detail::expm2(a, t);
  const complex eta = e[0] * mode.eta + e[1] * par;
  const complex par_t = e[2] * mode.eta + e[3] * par;
  const complex perp_t = std::exp(-kk * t / rb) * perp;
  return {mode.k1, mode.k2, eta, e1 * par_t - e2 * perp_t, e2 * par_t + e1 * perp_t};
}

inline std::vector<LinearMode> evolve_linear(std::span<const LinearMode> modes, double nu, double t,
                                             const LinearCoefficients& coef = {}) {
  std::vector<LinearMode> out;
  out.reserve(modes.size());
  for (const auto& m : modes) out.push_back(evolve_linear(m, nu, t, coef));
  return out;
}

}  // namespace vislim
