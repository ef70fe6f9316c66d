#pragma once

// Trajectory diagnostics: the energy-inequality residual, the auxiliary
// density rho~ transported by P v, the distance between a compressible run
// and its incompressible reference, and log-log rate fits.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "vislim/cns.hpp"
#include "vislim/error.hpp"
#include "vislim/helmholtz.hpp"
#include "vislim/ins.hpp"
#include "vislim/spectral.hpp"
#include "vislim/trajectory.hpp"

namespace vislim {

/// E(t) + int_0^t D - E(0) at every record. Nonpositive values (or values
/// within a tolerance of zero) are consistent with the energy inequality.
inline std::vector<double> energy_identity_residual(const CnsTrajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.records.size());
  for (const auto& r : traj.records) out.push_back(r.row.energy_residual);
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary density: rho~_t + P v . grad rho~ = 0, rho~(0) = rho0, r = rho - rho~.

namespace detail {

/// -div(a w) with dealiased product, the same form the compressible solver
/// uses for its density.
inline Spectrum transport_tendency(const Spectrum& a_hat, const VectorSpectrum& w_hat) {
  return mass_flux_tendency(inverse(truncated(a_hat)), inverse(truncated(w_hat)));
}

inline VectorSpectrum solenoidal_part(const VectorField2D& v) { return p_project(forward(v)); }

}  // namespace detail

struct AuxiliaryPoint {
  double t = 0.0;
  double r_lq = 0.0;
  double r_l2 = 0.0;
  double rho_tilde_l2 = 0.0;
};

struct AuxiliaryDensityResult {
  std::vector<AuxiliaryPoint> series;
  double sup_r_lq = 0.0;
  std::vector<FlowSnapshot> rho_tilde;  // density = rho~, velocity = P v
};

/// Advances rho~ alongside a compressible run: call observe() on the initial
/// state, step() from the run's on_step hook and mark() at record times. The
/// update mirrors the solver's Heun density step with P v in place of v, so
/// discretisation errors of the two densities largely cancel in r.
class AuxiliaryDensityTracker {
 public:
  AuxiliaryDensityTracker(const Field2D& rho0, double q) : rho_tilde_(forward(rho0)), q_(q) {
    if (!(q >= 1.0)) throw InvalidArgument("L_q exponent must be >= 1");
  }

  void step(const CnsState& before, const CnsState& after) {
    const double dt = after.t - before.t;
    const VectorSpectrum w0 = detail::solenoidal_part(before.v);
    const VectorSpectrum w1 = detail::solenoidal_part(after.v);
    const Spectrum k1 = detail::transport_tendency(rho_tilde_, w0);
    const Spectrum mid = rho_tilde_ + k1 * complex{dt, 0.0};
    const Spectrum k2 = detail::transport_tendency(mid, w1);
    rho_tilde_ += (k1 + k2) * complex{0.5 * dt, 0.0};
    observe(after);
  }

  void observe(const CnsState& s) {
    const Field2D rt = inverse(rho_tilde_);
    const Field2D r = s.rho - rt;
    AuxiliaryPoint p{s.t, lp_norm(r, q_), lp_norm(r, 2.0), lp_norm(rt, 2.0)};
    sup_ = std::max(sup_, p.r_lq);
    last_ = p;
  }

  /// Appends the latest point to the series (call at record times).
  void mark() {
    if (series_.empty() || series_.back().t != last_.t) series_.push_back(last_);
  }

  Field2D rho_tilde() const { return inverse(rho_tilde_); }
  double sup_r_lq() const { return sup_; }
  const std::vector<AuxiliaryPoint>& series() const { return series_; }

 private:
  Spectrum rho_tilde_;
  double q_;
  double sup_ = 0.0;
  AuxiliaryPoint last_;
  std::vector<AuxiliaryPoint> series_;
};

struct AuxiliaryDensityOptions {
  double q = 2.5;
  /// Substeps between consecutive snapshots.
  int substeps = 20;
  /// Largest tolerated relative second difference of P v between snapshots,
  /// a proxy for the error of linear interpolation in time.
  double cadence_tolerance = 1e-3;
};

/// Offline variant working from stored snapshots; P v is interpolated
/// linearly in time between them.
inline AuxiliaryDensityResult auxiliary_density(const std::vector<FlowSnapshot>& snaps,
                                                const AuxiliaryDensityOptions& opt = {}) {
  if (snaps.size() < 2) throw InvalidArgument("auxiliary_density needs at least two snapshots");
  if (opt.substeps < 1) throw InvalidArgument("substeps must be >= 1");
  std::vector<VectorSpectrum> w;
  w.reserve(snaps.size());
  for (const auto& s : snaps) w.push_back(detail::solenoidal_part(s.velocity));
  for (std::size_t k = 1; k + 1 < snaps.size(); ++k) {
    const double h0 = snaps[k].t - snaps[k - 1].t;
    const double h1 = snaps[k + 1].t - snaps[k].t;
    if (!(h0 > 0.0) || std::abs(h1 - h0) > 1e-9 * h0) throw InvalidArgument("snapshot times must be uniformly spaced");
    const VectorSpectrum second = w[k + 1] - w[k] * complex{2.0, 0.0} + w[k - 1];
    const double num = std::sqrt(l2_norm_squared(second.x) + l2_norm_squared(second.y)) / 8.0;
    const double den = std::sqrt(l2_norm_squared(w[k].x) + l2_norm_squared(w[k].y));
    if (den > 0.0 && num > opt.cadence_tolerance * den) {
      throw Error("snapshot cadence too coarse for auxiliary density: relative interpolation error " +
                  std::to_string(num / den) + " at t=" + std::to_string(snaps[k].t));
    }
  }

  AuxiliaryDensityResult out;
  Spectrum rho_tilde = forward(snaps.front().density);
  auto record = [&](std::size_t k) {
    const Field2D rt = inverse(rho_tilde);
    const Field2D r = snaps[k].density - rt;
    AuxiliaryPoint p{snaps[k].t, lp_norm(r, opt.q), lp_norm(r, 2.0), lp_norm(rt, 2.0)};
    out.sup_r_lq = std::max(out.sup_r_lq, p.r_lq);
    out.series.push_back(p);
    out.rho_tilde.push_back(FlowSnapshot{snaps[k].t, rt, inverse(w[k])});
  };
  record(0);
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    const double span = snaps[k + 1].t - snaps[k].t;
    const double h = span / opt.substeps;
    auto at = [&](double s) {
      const double theta = s / span;
      return w[k] * complex{1.0 - theta, 0.0} + w[k + 1] * complex{theta, 0.0};
    };
    for (int m = 0; m < opt.substeps; ++m) {
      const Spectrum k1 = detail::transport_tendency(rho_tilde, at(m * h));
      const Spectrum mid = rho_tilde + k1 * complex{h, 0.0};
      const Spectrum k2 = detail::transport_tendency(mid, at((m + 1) * h));
      rho_tilde += (k1 + k2) * complex{0.5 * h, 0.0};
    }
    record(k + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distance between a compressible run (rho, v) and the incompressible
// reference (eta, u):
//   sup_t (||rho - eta||^2 + ||P v - u||^2 + ||grad Q v||^2)
//     + int_0^T (||grad(P v - u)||^2 + ||grad Q v||_{H^1}^2) dt

struct ConvergenceTerms {
  double density = 0.0;        // ||rho - eta||_2^2
  double solenoidal = 0.0;     // ||P v - u||_2^2
  double potential = 0.0;      // ||grad Q v||_2^2
  double solenoidal_grad = 0.0;  // ||grad(P v - u)||_2^2
  double potential_h1 = 0.0;   // ||grad Q v||_{H^1}^2
};

struct ConvergenceMetric {
  std::vector<double> times;
  std::vector<ConvergenceTerms> terms;
  double sup_density = 0.0;
  double sup_solenoidal = 0.0;
  double sup_potential = 0.0;
  double sup_sum = 0.0;
  double int_solenoidal_grad = 0.0;
  double int_potential_h1 = 0.0;
  double total() const { return sup_sum + int_solenoidal_grad + int_potential_h1; }
};

inline ConvergenceTerms convergence_terms(const FlowSnapshot& cns, const FlowSnapshot& ins) {
  require_same_grid(cns.density.grid(), ins.density.grid());
  const VectorSpectrum v = forward(cns.velocity);
  const VectorSpectrum q = q_project(v);
  const VectorSpectrum p = v - q;
  const VectorSpectrum diff = p - forward(ins.velocity);
  ConvergenceTerms t;
  t.density = l2_norm_squared(forward(cns.density - ins.density));
  t.solenoidal = l2_norm_squared(diff.x) + l2_norm_squared(diff.y);
  t.potential = gradient_norm_squared(q.x) + gradient_norm_squared(q.y);
  t.solenoidal_grad = gradient_norm_squared(diff.x) + gradient_norm_squared(diff.y);
  t.potential_h1 = t.potential + hessian_norm_squared(q.x) + hessian_norm_squared(q.y);
  return t;
}

inline ConvergenceMetric convergence_metric(std::span<const FlowSnapshot> cns, std::span<const FlowSnapshot> ins) {
  if (cns.size() != ins.size() || cns.empty()) {
    throw InvalidArgument("convergence_metric: trajectories have different snapshot counts (" +
                          std::to_string(cns.size()) + " vs " + std::to_string(ins.size()) + ")");
  }
  ConvergenceMetric m;
  for (std::size_t k = 0; k < cns.size(); ++k) {
    const double tol = 1e-9 * std::max(1.0, std::abs(cns[k].t));
    if (std::abs(cns[k].t - ins[k].t) > tol) {
      throw InvalidArgument("convergence_metric: snapshot times differ at index " + std::to_string(k) + " (" +
                            std::to_string(cns[k].t) + " vs " + std::to_string(ins[k].t) + ")");
    }
    const ConvergenceTerms t = convergence_terms(cns[k], ins[k]);
    m.sup_density = std::max(m.sup_density, t.density);
    m.sup_solenoidal = std::max(m.sup_solenoidal, t.solenoidal);
    m.sup_potential = std::max(m.sup_potential, t.potential);
    m.sup_sum = std::max(m.sup_sum, t.density + t.solenoidal + t.potential);
    if (k > 0) {
      const double h = cns[k].t - cns[k - 1].t;
      const ConvergenceTerms& prev = m.terms.back();
      m.int_solenoidal_grad += 0.5 * h * (prev.solenoidal_grad + t.solenoidal_grad);
      m.int_potential_h1 += 0.5 * h * (prev.potential_h1 + t.potential_h1);
    }
    m.times.push_back(cns[k].t);
    m.terms.push_back(t);
  }
  return m;
}

// ---------------------------------------------------------------------------

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares fit of log(value) = intercept + slope * log(nu).
inline RateFit fit_rate(std::span<const double> values, std::span<const double> nus) {
  if (values.size() != nus.size()) throw InvalidArgument("fit_rate: length mismatch");
  if (values.size() < 3) throw InvalidArgument("fit_rate needs at least 3 points");
  const std::size_t n = values.size();
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(values[k] > 0.0)) throw InvalidArgument("fit_rate: nonpositive value " + std::to_string(values[k]));
    if (!(nus[k] > 0.0)) throw InvalidArgument("fit_rate: nonpositive abscissa " + std::to_string(nus[k]));
    x[k] = std::log(nus[k]);
    y[k] = std::log(values[k]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("fit_rate: abscissae are all equal");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = y[k] - (f.intercept + f.slope * x[k]);
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace vislim
