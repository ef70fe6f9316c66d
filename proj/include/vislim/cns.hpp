#pragma once

// Compressible barotropic Navier-Stokes with shear viscosity 1 and volume
// viscosity nu:
//
//   rho_t + div(rho v) = 0
//   rho v_t + rho v.grad v - Delta v - nu grad div v + grad P(rho) = 0
//
// Time stepping is IMEX. The operator c (Delta + nu grad div) with
// c = 1 / min(rho) is implicit (an exact 2x2 solve per wavevector); the rest
// of (1/rho)(Delta + nu grad div) v, the pressure force and advection are
// explicit. Order 1 is IMEX Euler, order 2 is IMEX BDF2. Density is advanced
// by Heun's method with the new velocity in the second stage.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vislim/energy.hpp"
#include "vislim/error.hpp"
#include "vislim/spectral.hpp"
#include "vislim/thermo.hpp"
#include "vislim/trajectory.hpp"

namespace vislim {

struct CnsState {
  Field2D rho;
  VectorField2D v;
  double t = 0.0;
};

struct CnsParams {
  double nu = 0.0;
  PressureLaw law = PressureLaw::gamma_law(1.0, 2.0, 1.0);
  double dt = 1e-3;
  double t_end = 1.0;
  double cfl_safety = 0.5;
  /// 1: IMEX Euler, 2: IMEX BDF2.
  int time_order = 1;
};

/// Density-range headroom applied to the sound speed in the CFL bound.
inline constexpr double kSoundSpeedHeadroom = 1.2;

namespace detail {

inline void require_positive_density(const Field2D& rho, const char* context) {
  const int n = rho.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!(rho(i, j) > 0.0)) throw NonpositiveDensity(i, j, rho(i, j), context);
    }
  }
}

/// L v = Delta v + nu grad div v, spectrally.
inline VectorSpectrum apply_lame(const VectorSpectrum& v, double nu) {
  const Grid& g = v.grid();
  VectorSpectrum out(g);
  for (int i = 0; i < g.n(); ++i) {
    const int k1 = g.wavenumber(i);
    const double o1 = g.odd_wavenumber(i);
    for (int j = 0; j < g.half(); ++j) {
      const double o2 = g.odd_wavenumber(j);
      const double kk = static_cast<double>(k1 * k1 + j * j);
      const complex dot = o1 * v.x(i, j) + o2 * v.y(i, j);
      out.x(i, j) = -kk * v.x(i, j) - nu * o1 * dot;
      out.y(i, j) = -kk * v.y(i, j) - nu * o2 * dot;
    }
  }
  return out;
}

/// Solves (alpha I - dtc L) x = rhs mode by mode: the component along k is
/// damped by alpha + dtc (|k|^2 + nu |k|^2), the transverse one by alpha + dtc |k|^2.
inline VectorSpectrum solve_lame(const VectorSpectrum& rhs, double alpha, double dtc, double nu) {
  const Grid& g = rhs.grid();
  VectorSpectrum out(g);
  for (int i = 0; i < g.n(); ++i) {
    const int k1 = g.wavenumber(i);
    const double o1 = g.odd_wavenumber(i);
    for (int j = 0; j < g.half(); ++j) {
      const double o2 = g.odd_wavenumber(j);
      const double kk = static_cast<double>(k1 * k1 + j * j);
      const double oo = o1 * o1 + o2 * o2;
      const complex rx = rhs.x(i, j);
      const complex ry = rhs.y(i, j);
      const double perp_factor = 1.0 / (alpha + dtc * kk);
      if (oo == 0.0) {
        out.x(i, j) = rx * perp_factor;
        out.y(i, j) = ry * perp_factor;
        continue;
      }
      const complex dot = (o1 * rx + o2 * ry) / oo;
      const complex px = o1 * dot;
      const complex py = o2 * dot;
      const double par_factor = 1.0 / (alpha + dtc * (kk + nu * oo));
      out.x(i, j) = (rx - px) * perp_factor + px * par_factor;
      out.y(i, j) = (ry - py) * perp_factor + py * par_factor;
    }
  }
  return out;
}

struct CnsTerms {
  Spectrum rho_hat;
  VectorSpectrum v_hat;
  /// trunc F[(1/rho)(L v - grad P) - v.grad v]
  VectorSpectrum tendency;
  /// trunc(L v)
  VectorSpectrum lame;
  /// -div trunc(rho v)
  Spectrum mass_tendency;
};

inline Spectrum mass_flux_tendency(const Field2D& rho_f, const VectorField2D& v_f) {
  const VectorSpectrum flux{band_limited(pointwise_product(rho_f, v_f.x)), band_limited(pointwise_product(rho_f, v_f.y))};
  return divergence(flux) * complex{-1.0, 0.0};
}

inline CnsTerms cns_terms(const CnsState& s, const CnsParams& p) {
  const Grid& g = s.rho.grid();
  Spectrum rho_hat = forward(s.rho);
  VectorSpectrum v_hat = forward(s.v);
  const Field2D rho_f = inverse(truncated(rho_hat));
  require_positive_density(rho_f, "dealiased density");
  const VectorSpectrum vt = truncated(v_hat);
  const VectorField2D v_f = inverse(vt);
  const Field2D d11 = inverse(derivative(vt.x, 1));
  const Field2D d12 = inverse(derivative(vt.x, 2));
  const Field2D d21 = inverse(derivative(vt.y, 1));
  const Field2D d22 = inverse(derivative(vt.y, 2));
  VectorSpectrum lame = truncated(apply_lame(v_hat, p.nu));
  const VectorField2D lame_f = inverse(lame);
  const Field2D inv_rho = inverse(band_limited(rho_f.map([](double r) { return 1.0 / r; })));
  const Spectrum p_hat = band_limited(pressure(p.law, rho_f));
  const VectorField2D grad_p = inverse(gradient(p_hat));

  Field2D gx(g);
  Field2D gy(g);
  {
    auto ox = gx.values();
    auto oy = gy.values();
    const auto ir = inv_rho.values();
    const auto lx = lame_f.x.values();
    const auto ly = lame_f.y.values();
    const auto px = grad_p.x.values();
    const auto py = grad_p.y.values();
    const auto v1 = v_f.x.values();
    const auto v2 = v_f.y.values();
    const auto a11 = d11.values();
    const auto a12 = d12.values();
    const auto a21 = d21.values();
    const auto a22 = d22.values();
    for (std::size_t k = 0; k < ox.size(); ++k) {
      ox[k] = ir[k] * (lx[k] - px[k]) - (v1[k] * a11[k] + v2[k] * a12[k]);
      oy[k] = ir[k] * (ly[k] - py[k]) - (v1[k] * a21[k] + v2[k] * a22[k]);
    }
  }
  VectorSpectrum tendency{band_limited(gx), band_limited(gy)};
  Spectrum mass = mass_flux_tendency(rho_f, v_f);
  return CnsTerms{std::move(rho_hat), std::move(v_hat), std::move(tendency), std::move(lame), std::move(mass)};
}

}  // namespace detail

/// Largest dt allowed by the advective/acoustic CFL condition.
inline double cns_admissible_dt(const CnsState& s, const CnsParams& p) {
  double vmax = 0.0;
  const auto a = s.v.x.values();
  const auto b = s.v.y.values();
  for (std::size_t k = 0; k < a.size(); ++k) vmax = std::max(vmax, std::hypot(a[k], b[k]));
  const double lo = s.rho.min();
  const double hi = s.rho.max();
  if (!(lo > 0.0)) throw NonpositiveDensity(lo);
  double c2 = std::max(p.law.derivative(hi * kSoundSpeedHeadroom), p.law.derivative(lo / kSoundSpeedHeadroom));
  for (double r : s.rho.values()) c2 = std::max(c2, p.law.derivative(r));
  return p.cfl_safety * s.rho.grid().spacing() / (vmax + std::sqrt(c2));
}

/// Right-hand side split by physical origin; velocity parts are dealiased.
struct CnsTendency {
  Field2D drho;
  VectorField2D viscous;    // (1/rho) Delta v
  VectorField2D bulk;       // (nu/rho) grad div v
  VectorField2D pressure;   // -(1/rho) grad P(rho)
  VectorField2D advection;  // -v.grad v

  VectorField2D dv() const { return viscous + bulk + pressure + advection; }
};

inline CnsTendency cns_rhs(const CnsState& s, const CnsParams& p) {
  require_same_grid(s.rho.grid(), s.v.grid());
  detail::require_positive_density(s.rho, "cns_rhs");
  const Field2D rho_f = dealias(s.rho);
  detail::require_positive_density(rho_f, "dealiased density");
  const VectorSpectrum v_hat = forward(s.v);
  const VectorSpectrum vt = truncated(v_hat);
  const VectorField2D v_f = inverse(vt);
  const Field2D inv_rho = dealias(rho_f.map([](double r) { return 1.0 / r; }));

  auto weighted = [&](const VectorSpectrum& w) {
    const VectorField2D wf = inverse(truncated(w));
    return VectorField2D{inverse(detail::band_limited(pointwise_product(inv_rho, wf.x))),
                         inverse(detail::band_limited(pointwise_product(inv_rho, wf.y)))};
  };
  const VectorSpectrum lap{laplacian(v_hat.x), laplacian(v_hat.y)};
  const VectorSpectrum graddiv = detail::apply_lame(v_hat, 1.0) - lap;
  VectorField2D viscous = weighted(lap);
  VectorField2D bulk = weighted(graddiv * complex{p.nu, 0.0});
  VectorField2D pres = weighted(gradient(detail::band_limited(pressure(p.law, rho_f)))) * -1.0;

  auto advect = [&](const Spectrum& comp) {
    const Field2D a = inverse(derivative(comp, 1));
    const Field2D b = inverse(derivative(comp, 2));
    Field2D out = pointwise_product(v_f.x, a) + pointwise_product(v_f.y, b);
    return inverse(detail::band_limited(out)) * -1.0;
  };
  VectorField2D adv{advect(vt.x), advect(vt.y)};
  Field2D drho = inverse(detail::mass_flux_tendency(rho_f, v_f));
  return CnsTendency{std::move(drho), std::move(viscous), std::move(bulk), std::move(pres), std::move(adv)};
}

/// Steps the compressible system; keeps the history BDF2 needs.
class CnsIntegrator {
 public:
  explicit CnsIntegrator(CnsParams params) : params_(std::move(params)) {
    if (params_.time_order != 1 && params_.time_order != 2) throw InvalidArgument("time_order must be 1 or 2");
    if (!(params_.nu >= 0.0)) throw InvalidArgument("volume viscosity must be nonnegative");
    if (!(params_.cfl_safety > 0.0 && params_.cfl_safety <= 1.0)) {
      throw InvalidArgument("cfl_safety must lie in (0, 1]");
    }
  }

  const CnsParams& params() const { return params_; }
  void reset() { history_.reset(); }

  CnsState step(const CnsState& s) {
    require_same_grid(s.rho.grid(), s.v.grid());
    detail::require_positive_density(s.rho, "before step");
    const double admissible = cns_admissible_dt(s, params_);
    const double dt = params_.dt;
    if (dt > admissible) throw CflViolation(dt, admissible);

    detail::CnsTerms terms = detail::cns_terms(s, params_);
    CnsState out = [&] {
      if (params_.time_order == 1) return advance(s, terms, dt, nullptr);
      if (history_) return advance(s, terms, dt, &*history_);
      // BDF2 start-up: Richardson extrapolation of IMEX Euler keeps the first
      // step second-order accurate.
      const CnsState full = advance(s, terms, dt, nullptr);
      const CnsState half = advance(s, terms, 0.5 * dt, nullptr);
      const CnsState two_halves = advance(half, detail::cns_terms(half, params_), 0.5 * dt, nullptr);
      return CnsState{2.0 * two_halves.rho - full.rho, 2.0 * two_halves.v - full.v, s.t + dt};
    }();
    detail::require_positive_density(out.rho, "after step");
    history_ = History{std::move(terms.v_hat), std::move(terms.tendency), std::move(terms.lame)};
    return out;
  }

 private:
  struct History {
    VectorSpectrum v_hat;
    VectorSpectrum tendency;
    VectorSpectrum lame;
  };

  // IMEX Euler (history == nullptr) or IMEX BDF2 from the terms at s.
  CnsState advance(const CnsState& s, const detail::CnsTerms& terms, double dt, const History* history) const {
    const double c = 1.0 / s.rho.min();
    const VectorSpectrum expl = terms.tendency - terms.lame * complex{c, 0.0};
    VectorSpectrum rhs(s.rho.grid());
    double alpha = 1.0;
    if (history) {
      const VectorSpectrum prev = history->tendency - history->lame * complex{c, 0.0};
      rhs = terms.v_hat * complex{2.0, 0.0} - history->v_hat * complex{0.5, 0.0} +
            (expl * complex{2.0, 0.0} - prev) * complex{dt, 0.0};
      alpha = 1.5;
    } else {
      rhs = terms.v_hat + expl * complex{dt, 0.0};
    }
    const VectorSpectrum v_new = detail::solve_lame(rhs, alpha, dt * c, params_.nu);

    const Spectrum rho_star = terms.rho_hat + terms.mass_tendency * complex{dt, 0.0};
    const Field2D rho_star_f = inverse(truncated(rho_star));
    const VectorField2D v_new_f = inverse(truncated(v_new));
    const Spectrum second = detail::mass_flux_tendency(rho_star_f, v_new_f);
    const Spectrum rho_new = terms.rho_hat + (terms.mass_tendency + second) * complex{0.5 * dt, 0.0};
    CnsState out{inverse(rho_new), inverse(v_new), s.t + dt};
    detail::require_positive_density(out.rho, "after step");
    return out;
  }

  CnsParams params_;
  std::optional<History> history_;
};

/// One IMEX Euler step.
inline CnsState cns_step(const CnsState& s, const CnsParams& p) {
  CnsParams first = p;
  first.time_order = 1;
  return CnsIntegrator(first).step(s);
}

struct CnsRunOptions {
  /// Time between records; 0 means t_end / 200.
  double record_interval = 0.0;
  bool keep_snapshots = true;
  /// Exponent q of the L_q diagnostics.
  double lq_exponent = 2.5;
  /// Density band [rho_lower, rho_upper]; rho_lower = 0 disables the checks.
  double rho_lower = 0.0;
  double rho_upper = std::numeric_limits<double>::infinity();
  /// Written with the last good state when a step fails.
  std::optional<std::filesystem::path> failure_snapshot;
};

/// Diagnostics at one recorded time.
struct CnsRecord {
  SeriesRow row;
  // Energy-level quantities.
  double sqrt_nu_l2_div = 0.0;        // nu^{1/2} ||div v(t)||_2
  double l2_density_deviation = 0.0;  // ||rho(t) - rho_bar||_2
  double grad_v_l2h1 = 0.0;           // ||grad v||_{L2(0,t;H1)}
  double vt_l2 = 0.0;                 // ||v_t||_{L2(0,t x T2)}
  double sqrt_nu_grad_div_l2 = 0.0;   // nu^{1/2} ||grad div v||_{L2(0,t x T2)}
  // L_q-level quantities.
  double v_bessel = 0.0;              // ||v||_{W^{2-2/q}_q} (Bessel-potential surrogate)
  double grad_div_lq = 0.0;           // ||grad div v||_{Lq(0,t x T2)}
  double grad_rho_lq = 0.0;           // ||grad rho(t)||_q
  double energy_functional = 0.0;
  double equivalence_ratio = 0.0;     // E / (||v||_H1^2 + ||rho - rho_bar||^2 + nu ||div v||^2)
};

struct CnsTrajectory {
  std::vector<CnsRecord> records;
  std::vector<FlowSnapshot> snapshots;
  std::vector<std::string> warnings;
  std::optional<CnsState> final_state;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  /// sup over every step of ||div v||_2.
  double sup_div_l2 = 0.0;
  /// ||grad div v||_{Lq(0,T x T2)} with every step in the quadrature.
  double grad_div_lq = 0.0;
  long long steps = 0;
};

struct CnsHooks {
  std::function<void(const CnsState& before, const CnsState& after)> on_step;
  std::function<void(const CnsState&, const CnsRecord&)> on_record;
};

namespace detail {

/// Per-state integrands accumulated by the trapezoid rule.
struct CnsRates {
  double dissipation = 0.0;    // ||grad v||^2 + nu ||div v||^2
  double grad_v_h1 = 0.0;      // ||grad v||^2 + ||grad^2 v||^2
  double grad_div_sq = 0.0;    // ||grad div v||_2^2
  double grad_div_q = 0.0;     // ||grad div v||_q^q
  double div_l2 = 0.0;
};

inline CnsRates cns_rates(const VectorField2D& v, double nu, double q) {
  const VectorSpectrum vh = forward(v);
  const Spectrum div = divergence(vh);
  CnsRates r;
  const double grad = gradient_norm_squared(vh.x) + gradient_norm_squared(vh.y);
  const double div2 = l2_norm_squared(div);
  r.dissipation = grad + nu * div2;
  r.grad_v_h1 = grad + hessian_norm_squared(vh.x) + hessian_norm_squared(vh.y);
  r.grad_div_sq = gradient_norm_squared(div);
  r.grad_div_q = std::pow(lp_norm(inverse(gradient(div)), q), q);
  r.div_l2 = std::sqrt(div2);
  return r;
}

}  // namespace detail

/// Advances to t_end, recording diagnostics every record_interval.
inline CnsTrajectory cns_run(const CnsState& initial, const CnsParams& params, const CnsRunOptions& options = {},
                             const CnsHooks& hooks = {}) {
  const long long steps = step_count(params.t_end, params.dt);
  const double interval = options.record_interval > 0.0 ? options.record_interval : params.t_end / 200.0;
  const long long stride = record_stride(interval, params.dt);
  const double q = options.lq_exponent;
  const double rho_bar = params.law.rho_bar();
  const bool band = options.rho_lower > 0.0;

  if (band && (initial.rho.min() < 2.0 * options.rho_lower || initial.rho.max() > 0.5 * options.rho_upper)) {
    throw InvalidArgument("initial density violates 2 rho_lower <= rho0 <= rho_upper / 2");
  }

  CnsTrajectory traj;
  traj.steps = steps;
  traj.initial_mass = initial.rho.integral();

  CnsIntegrator integrator(params);
  CnsState state = initial;
  detail::CnsRates rates = detail::cns_rates(state.v, params.nu, q);
  traj.sup_div_l2 = rates.div_l2;
  double dissipation = 0.0;
  double grad_v_h1 = 0.0;
  double vt_sq = 0.0;
  double grad_div_sq = 0.0;
  double grad_div_q = 0.0;
  const double energy0 = physical_energy(initial.rho, initial.v, params.law);
  bool outside_band = false;

  auto record = [&](const CnsState& s) {
    CnsRecord rec;
    rec.row.t = s.t;
    rec.row.min_rho = s.rho.min();
    rec.row.max_rho = s.rho.max();
    rec.row.l2_v = lp_norm(s.v, 2.0);
    rec.row.h1_v = h1_norm(s.v);
    rec.row.l2_divv = rates.div_l2;
    rec.row.energy = physical_energy(s.rho, s.v, params.law);
    rec.row.dissipation = dissipation;
    rec.row.energy_residual = rec.row.energy + dissipation - energy0;
    rec.sqrt_nu_l2_div = std::sqrt(params.nu) * rates.div_l2;
    Field2D dev = s.rho;
    dev += -rho_bar;
    rec.l2_density_deviation = lp_norm(dev, 2.0);
    rec.grad_v_l2h1 = std::sqrt(grad_v_h1);
    rec.vt_l2 = std::sqrt(vt_sq);
    rec.sqrt_nu_grad_div_l2 = std::sqrt(params.nu * grad_div_sq);
    rec.v_bessel = bessel_norm(s.v, 2.0 - 2.0 / q, q);
    rec.grad_div_lq = std::pow(grad_div_q, 1.0 / q);
    rec.grad_rho_lq = lp_norm(gradient(s.rho), q);
    rec.energy_functional = energy_functional(s.rho, s.v, params.nu, params.law);
    const double denom = energy_norm_squared(s.rho, s.v, params.nu, rho_bar);
    rec.equivalence_ratio = denom > 0.0 ? rec.energy_functional / denom : 1.0;
    if (options.keep_snapshots) traj.snapshots.push_back(FlowSnapshot{s.t, s.rho, s.v});
    if (hooks.on_record) hooks.on_record(s, rec);
    traj.records.push_back(rec);
  };

  record(state);
  for (long long n = 1; n <= steps; ++n) {
    CnsState next = [&] {
      try {
        return integrator.step(state);
      } catch (const Error&) {
        if (options.failure_snapshot) write_snapshot(*options.failure_snapshot, to_snapshot({state.t, state.rho, state.v}));
        throw;
      }
    }();
    next.t = static_cast<double>(n) * params.dt;
    const detail::CnsRates next_rates = detail::cns_rates(next.v, params.nu, q);
    const double h = params.dt;
    dissipation += 0.5 * h * (rates.dissipation + next_rates.dissipation);
    grad_v_h1 += 0.5 * h * (rates.grad_v_h1 + next_rates.grad_v_h1);
    grad_div_sq += 0.5 * h * (rates.grad_div_sq + next_rates.grad_div_sq);
    grad_div_q += 0.5 * h * (rates.grad_div_q + next_rates.grad_div_q);
    const VectorField2D dv = (next.v - state.v) * (1.0 / h);
    const double dvn = lp_norm(dv, 2.0);
    vt_sq += h * dvn * dvn;
    traj.sup_div_l2 = std::max(traj.sup_div_l2, next_rates.div_l2);

    if (band) {
      const bool out = next.rho.min() < options.rho_lower || next.rho.max() > options.rho_upper;
      if (out && !outside_band) {
        std::ostringstream msg;
        msg << "t=" << next.t << ": density left the band [" << options.rho_lower << ", " << options.rho_upper
            << "] (min " << next.rho.min() << ", max " << next.rho.max() << ")";
        traj.warnings.push_back(msg.str());
        std::clog << "warning: " << msg.str() << '\n';
      }
      outside_band = out;
    }

    if (hooks.on_step) hooks.on_step(state, next);
    state = std::move(next);
    rates = next_rates;
    if (n % stride == 0 || n == steps) record(state);
  }
  traj.grad_div_lq = std::pow(grad_div_q, 1.0 / q);
  traj.final_mass = state.rho.integral();
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace vislim
