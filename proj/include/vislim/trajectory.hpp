#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vislim/snapshot.hpp"
#include "vislim/spectral.hpp"

namespace vislim {

/// Density and velocity at one recorded time. Used for both systems
/// (rho, v) and (eta, u).
struct FlowSnapshot {
  double t = 0.0;
  Field2D density;
  VectorField2D velocity;
};

inline Snapshot to_snapshot(const FlowSnapshot& s) {
  return Snapshot{s.t, {{"rho", s.density}, {"v1", s.velocity.x}, {"v2", s.velocity.y}}};
}

inline FlowSnapshot from_snapshot(const Snapshot& s) {
  return FlowSnapshot{s.time, s.field("rho"), VectorField2D{s.field("v1"), s.field("v2")}};
}

/// Row of the per-run diagnostics CSV shared by both solvers.
struct SeriesRow {
  double t = 0.0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double l2_v = 0.0;
  double h1_v = 0.0;
  double l2_divv = 0.0;
  /// Physical energy: int (rho |v|^2 / 2 + e(rho)) for CNS, int eta |u|^2 / 2 for INS.
  double energy = 0.0;
  /// int_0^t of the viscous dissipation rate.
  double dissipation = 0.0;
  double energy_residual = 0.0;
};

/// Number of steps of size dt that reach t_end; rejects non-integral ratios.
inline long long step_count(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw InvalidArgument("need dt > 0 and t_end >= 0");
  const double ratio = t_end / dt;
  const auto steps = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw InvalidArgument("t_end must be an integer multiple of dt");
  }
  return steps;
}

/// Steps between records for a requested interval (at least one).
inline long long record_stride(double interval, double dt) {
  if (!(interval > 0.0)) return 1;
  return std::max<long long>(1, std::llround(interval / dt));
}

}  // namespace vislim
