#pragma once

// Inhomogeneous incompressible Navier-Stokes (shear viscosity 1):
//
//   eta_t + u.grad eta = 0,  eta (u_t + u.grad u) - Delta u + grad Pi = 0,  div u = 0
//
// Variable-density projection. Per step:
//   1. eta is transported by RK2 in skew-symmetric form (conserves ||eta||_2),
//   2. u* from explicit advection and implicit diffusion with coefficient
//      c = 1/max(eta); the rest of (1/eta) Delta u is explicit,
//   3. div(a grad Phi) = div u*, a = 1/eta, solved by a fixed-point iteration
//      preconditioned with the constant-coefficient inverse Laplacian,
//   4. u = u* - a grad Phi.
// All products are dealiased and every field stays inside the 2/3 band.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vislim/energy.hpp"
#include "vislim/error.hpp"
#include "vislim/interpolant.hpp"
#include "vislim/spectral.hpp"
#include "vislim/trajectory.hpp"

namespace vislim {

struct InsState {
  Field2D eta;
  VectorField2D u;
  double t = 0.0;
};

struct InsParams {
  double dt = 1e-3;
  double t_end = 1.0;
  double cfl_safety = 0.5;
  /// 1: IMEX Euler, 2: IMEX BDF2.
  int time_order = 1;
  int max_pressure_iterations = 200;
  /// Projection stops once ||div u||_2 <= tolerance * ||u||_{H^1}.
  double divergence_tolerance = 1e-10;
};

/// Outcome of the last pressure solve.
struct ProjectionReport {
  int iterations = 0;
  double divergence = 0.0;  // ||div u||_2
  double h1 = 0.0;          // ||u||_{H^1}
};

namespace detail {

inline Spectrum skew_advection(const VectorSpectrum& u_hat, const Spectrum& eta_hat) {
  const VectorField2D u = inverse(u_hat);
  const Field2D eta = inverse(eta_hat);
  const VectorField2D ge = inverse(gradient(eta_hat));
  const Spectrum adv = band_limited(pointwise_product(u.x, ge.x) + pointwise_product(u.y, ge.y));
  const VectorSpectrum flux{band_limited(pointwise_product(u.x, eta)), band_limited(pointwise_product(u.y, eta))};
  return (adv + divergence(flux)) * complex{-0.5, 0.0};
}

inline VectorSpectrum weighted_field(const Field2D& a, const VectorSpectrum& w_hat) {
  const VectorField2D w = inverse(w_hat);
  return {band_limited(pointwise_product(a, w.x)), band_limited(pointwise_product(a, w.y))};
}

inline VectorSpectrum advection_term(const VectorSpectrum& u_hat) {
  const VectorField2D u = inverse(u_hat);
  auto one = [&](const Spectrum& comp) {
    const Field2D a = inverse(derivative(comp, 1));
    const Field2D b = inverse(derivative(comp, 2));
    return band_limited(pointwise_product(u.x, a) + pointwise_product(u.y, b));
  };
  return {one(u_hat.x), one(u_hat.y)};
}

inline VectorSpectrum vector_laplacian(const VectorSpectrum& u) { return {laplacian(u.x), laplacian(u.y)}; }

}  // namespace detail

inline double ins_admissible_dt(const InsState& s, const InsParams& p) {
  double vmax = 0.0;
  const auto a = s.u.x.values();
  const auto b = s.u.y.values();
  for (std::size_t k = 0; k < a.size(); ++k) vmax = std::max(vmax, std::hypot(a[k], b[k]));
  if (vmax == 0.0) return std::numeric_limits<double>::infinity();
  return p.cfl_safety * s.eta.grid().spacing() / vmax;
}

class InsIntegrator {
 public:
  explicit InsIntegrator(InsParams params) : params_(params) {
    if (params_.time_order != 1 && params_.time_order != 2) throw InvalidArgument("time_order must be 1 or 2");
    if (params_.max_pressure_iterations < 1) throw InvalidArgument("max_pressure_iterations must be >= 1");
    if (!(params_.cfl_safety > 0.0 && params_.cfl_safety <= 1.0)) {
      throw InvalidArgument("cfl_safety must lie in (0, 1]");
    }
  }

  const InsParams& params() const { return params_; }
  const ProjectionReport& last_projection() const { return report_; }
  void reset() {
    history_.reset();
    phi_.reset();
  }

  InsState step(const InsState& s) {
    require_same_grid(s.eta.grid(), s.u.grid());
    const double dt = params_.dt;
    const double admissible = ins_admissible_dt(s, params_);
    if (dt > admissible) throw CflViolation(dt, admissible);
    if (!(s.eta.min() > 0.0)) throw NonpositiveDensity(s.eta.min());

    History next_history{VectorSpectrum(s.eta.grid()), VectorSpectrum(s.eta.grid()), VectorSpectrum(s.eta.grid())};
    InsState out = [&] {
      if (params_.time_order == 1) return advance(s, dt, nullptr, &next_history);
      if (history_) return advance(s, dt, &*history_, &next_history);
      // BDF2 start-up: Richardson extrapolation of IMEX Euler keeps the first
      // step second-order accurate.
      const InsState full = advance(s, dt, nullptr, &next_history);
      const InsState half = advance(s, 0.5 * dt, nullptr, nullptr);
      const InsState two_halves = advance(half, 0.5 * dt, nullptr, nullptr);
      Field2D eta = 2.0 * two_halves.eta - full.eta;
      if (!(eta.min() > 0.0)) throw NonpositiveDensity(eta.min());
      // The combination is solenoidal only up to the projection tolerance.
      const Field2D a = inverse(detail::band_limited(eta.map([](double e) { return 1.0 / e; })));
      const VectorSpectrum u = project(truncated(forward(2.0 * two_halves.u - full.u)), a);
      return InsState{std::move(eta), inverse(u), s.t + dt};
    }();
    history_ = std::move(next_history);
    return out;
  }

 private:
  struct History {
    VectorSpectrum u_hat;
    VectorSpectrum tendency;
    VectorSpectrum lap;
  };

  // IMEX Euler (history == nullptr) or IMEX BDF2 over dt; the terms at s are
  // stored in *keep when given.
  InsState advance(const InsState& s, double dt, const History* history, History* keep) {
    const Spectrum eta_hat = truncated(forward(s.eta));
    const VectorSpectrum u_hat = truncated(forward(s.u));
    const bool bdf2 = history != nullptr;

    // 1. density transport; the second stage uses u extrapolated to t + dt.
    const VectorSpectrum u_next_guess = bdf2 ? u_hat * complex{2.0, 0.0} - history->u_hat : u_hat;
    const Spectrum k1 = detail::skew_advection(u_hat, eta_hat);
    const Spectrum eta_star = eta_hat + k1 * complex{dt, 0.0};
    const Spectrum k2 = detail::skew_advection(u_next_guess, eta_star);
    const Spectrum eta_new_hat = eta_hat + (k1 + k2) * complex{0.5 * dt, 0.0};
    Field2D eta_new = inverse(eta_new_hat);
    if (!(eta_new.min() > 0.0)) throw NonpositiveDensity(eta_new.min());

    // 2. momentum without pressure.
    const Field2D a_now = inverse(detail::band_limited(s.eta.map([](double e) { return 1.0 / e; })));
    const VectorSpectrum lap = detail::vector_laplacian(u_hat);
    const VectorSpectrum tendency = detail::weighted_field(a_now, lap) - detail::advection_term(u_hat);
    const double c = 1.0 / s.eta.max();
    const VectorSpectrum expl = tendency - lap * complex{c, 0.0};
    VectorSpectrum rhs(s.eta.grid());
    double alpha = 1.0;
    if (bdf2) {
      const VectorSpectrum prev = history->tendency - history->lap * complex{c, 0.0};
      rhs = u_hat * complex{2.0, 0.0} - history->u_hat * complex{0.5, 0.0} +
            (expl * complex{2.0, 0.0} - prev) * complex{dt, 0.0};
      alpha = 1.5;
    } else {
      rhs = u_hat + expl * complex{dt, 0.0};
    }
    VectorSpectrum u_star(s.eta.grid());
    const Grid& g = s.eta.grid();
    for (int i = 0; i < g.n(); ++i) {
      const int kx = g.wavenumber(i);
      for (int j = 0; j < g.half(); ++j) {
        const double f = 1.0 / (alpha + dt * c * static_cast<double>(kx * kx + j * j));
        u_star.x(i, j) = rhs.x(i, j) * f;
        u_star.y(i, j) = rhs.y(i, j) * f;
      }
    }
    u_star = truncated(u_star);

    // 3-4. projection with the new density.
    const Field2D a_new = inverse(detail::band_limited(eta_new.map([](double e) { return 1.0 / e; })));
    VectorSpectrum u_new = project(u_star, a_new);

    if (keep) *keep = History{u_hat, tendency, lap};
    return InsState{std::move(eta_new), inverse(u_new), s.t + dt};
  }

  VectorSpectrum project(const VectorSpectrum& u_star, const Field2D& a) {
    const Grid& g = a.grid();
    const double c0 = 0.5 * (a.max() + a.min());
    const Spectrum div_star = divergence(u_star);
    Spectrum phi = phi_ ? *phi_ : Spectrum(g);
    report_ = {};
    auto corrected = [&](const Spectrum& p) { return u_star - detail::weighted_field(a, gradient(p)); };
    for (int it = 0;; ++it) {
      VectorSpectrum u = corrected(phi);
      const Spectrum div = divergence(u);
      report_.iterations = it;
      report_.divergence = std::sqrt(l2_norm_squared(div));
      report_.h1 = std::sqrt(h1_norm_squared(u.x) + h1_norm_squared(u.y));
      if (report_.divergence <= params_.divergence_tolerance * report_.h1) {
        phi_ = std::move(phi);
        return u;
      }
      if (it >= params_.max_pressure_iterations) {
        throw ConvergenceFailure("pressure iteration did not converge in " +
                                 std::to_string(params_.max_pressure_iterations) +
                                 " iterations (||div u|| = " + std::to_string(report_.divergence) +
                                 "); density contrast too large for the preconditioner");
      }
      // c0 Delta phi_new = div u* - div((a - c0) grad phi)
      const Spectrum lap_phi = laplacian(phi);
      const Spectrum rhs = div_star - (divergence(detail::weighted_field(a, gradient(phi))) - lap_phi * complex{c0, 0.0});
      phi = inverse_laplacian(rhs) * complex{1.0 / c0, 0.0};
    }
  }

  InsParams params_;
  std::optional<History> history_;
  std::optional<Spectrum> phi_;
  ProjectionReport report_;
};

inline InsState ins_step(const InsState& s, const InsParams& p) {
  InsParams first = p;
  first.time_order = 1;
  return InsIntegrator(first).step(s);
}

struct InsRecord {
  SeriesRow row;
  double eta_l2 = 0.0;
  double eta_l4 = 0.0;
  double eta_sup = 0.0;
  int pressure_iterations = 0;
  double divergence_ratio = 0.0;  // ||div u||_2 / ||u||_{H^1} after the last step
};

struct InsRunOptions {
  /// 0 means t_end / 200.
  double record_interval = 0.0;
  bool keep_snapshots = true;
};

struct InsTrajectory {
  std::vector<InsRecord> records;
  std::vector<FlowSnapshot> snapshots;
  std::optional<InsState> final_state;
  /// max over steps of ||div u||_2 / ||u||_{H^1}.
  double max_divergence_ratio = 0.0;
  int max_pressure_iterations = 0;
  long long steps = 0;
};

struct InsHooks {
  std::function<void(const InsState& before, const InsState& after, const ProjectionReport&)> on_step;
  std::function<void(const InsState&, const InsRecord&)> on_record;
};

inline InsTrajectory ins_run(const InsState& initial, const InsParams& params, const InsRunOptions& options = {},
                             const InsHooks& hooks = {}) {
  const long long steps = step_count(params.t_end, params.dt);
  const double interval = options.record_interval > 0.0 ? options.record_interval : params.t_end / 200.0;
  const long long stride = record_stride(interval, params.dt);
  InsTrajectory traj;
  traj.steps = steps;
  InsIntegrator integrator(params);
  InsState state = initial;
  const double energy0 = kinetic_energy(initial.eta, initial.u);
  double dissipation = 0.0;
  double rate = gradient_norm_squared(forward(state.u.x)) + gradient_norm_squared(forward(state.u.y));
  ProjectionReport last;

  auto record = [&](const InsState& s) {
    InsRecord rec;
    rec.row.t = s.t;
    rec.row.min_rho = s.eta.min();
    rec.row.max_rho = s.eta.max();
    rec.row.l2_v = lp_norm(s.u, 2.0);
    rec.row.h1_v = h1_norm(s.u);
    rec.row.l2_divv = lp_norm(divergence(s.u), 2.0);
    rec.row.energy = kinetic_energy(s.eta, s.u);
    rec.row.dissipation = dissipation;
    rec.row.energy_residual = rec.row.energy + dissipation - energy0;
    rec.eta_l2 = lp_norm(s.eta, 2.0);
    rec.eta_l4 = lp_norm(s.eta, 4.0);
    rec.eta_sup = sup_norm_interpolated(s.eta);
    rec.pressure_iterations = last.iterations;
    rec.divergence_ratio = last.h1 > 0.0 ? last.divergence / last.h1 : 0.0;
    if (options.keep_snapshots) traj.snapshots.push_back(FlowSnapshot{s.t, s.eta, s.u});
    if (hooks.on_record) hooks.on_record(s, rec);
    traj.records.push_back(rec);
  };

  record(state);
  for (long long n = 1; n <= steps; ++n) {
    InsState next = integrator.step(state);
    next.t = static_cast<double>(n) * params.dt;
    last = integrator.last_projection();
    if (last.h1 > 0.0) traj.max_divergence_ratio = std::max(traj.max_divergence_ratio, last.divergence / last.h1);
    traj.max_pressure_iterations = std::max(traj.max_pressure_iterations, last.iterations);
    const double next_rate = gradient_norm_squared(forward(next.u.x)) + gradient_norm_squared(forward(next.u.y));
    dissipation += 0.5 * params.dt * (rate + next_rate);
    rate = next_rate;
    if (hooks.on_step) hooks.on_step(state, next, last);
    state = std::move(next);
    if (n % stride == 0 || n == steps) record(state);
  }
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace vislim
