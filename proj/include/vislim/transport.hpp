#pragma once

// Characteristics of rho_t + div(rho v) = 0 for a prescribed velocity:
// flow maps X(t, y), the solution formula
//   rho(t, X(t, y)) = exp(-int_0^t div v(s, X(s, y)) ds) rho0(y),
// the Jacobian identity det grad_y X = exp(int_0^t div v(s, X(s, y)) ds),
// and empirical probes of the transport gradient estimate and of the
// Trudinger inequality.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <numeric>
#include <thread>
#include <vector>

#include "vislim/error.hpp"
#include "vislim/initial_data.hpp"
#include "vislim/interpolant.hpp"
#include "vislim/spectral.hpp"

namespace vislim {

using Point = std::array<double, 2>;

namespace detail {

/// Runs f(begin, end) over [0, count) split into contiguous chunks. Each index
/// is processed independently, so the partition does not affect results.
template <class F>
void parallel_chunks(std::size_t count, int threads, F&& f) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  if (workers == 1) {
    f(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&f, b, e] { f(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Velocity known at a list of times, linearly interpolated in between and
/// held constant outside. A single sample is a time-independent field.
class VelocitySeries {
 public:
  explicit VelocitySeries(const VectorField2D& frozen) : VelocitySeries(std::vector<double>{0.0}, {frozen}) {}

  VelocitySeries(std::vector<double> times, std::vector<VectorField2D> fields) : times_(std::move(times)) {
    if (times_.empty() || times_.size() != fields.size()) throw InvalidArgument("velocity series needs matching times and fields");
    for (std::size_t k = 1; k < times_.size(); ++k) {
      if (!(times_[k] > times_[k - 1])) throw InvalidArgument("velocity series times must increase");
    }
    grid_.emplace(fields.front().grid());
    for (const auto& f : fields) {
      require_same_grid(*grid_, f.grid());
      const VectorSpectrum s = forward(f);
      const Spectrum div = divergence(s);
      samples_.push_back(Sample{TrigInterpolant(s.x), TrigInterpolant(s.y), TrigInterpolant(div), f, inverse(div)});
    }
  }

  const Grid& grid() const { return *grid_; }
  const std::vector<double>& times() const { return times_; }
  bool frozen() const { return times_.size() == 1; }

  /// (v1, v2, div v) at (t, x).
  std::array<double, 3> evaluate(double t, double x1, double x2) const {
    const auto [k, theta] = locate(t);
    const auto a = sample_at(samples_[k], x1, x2);
    if (theta == 0.0) return a;
    const auto b = sample_at(samples_[k + 1], x1, x2);
    return {a[0] + theta * (b[0] - a[0]), a[1] + theta * (b[1] - a[1]), a[2] + theta * (b[2] - a[2])};
  }

  /// Grid field at time t (same interpolation in time).
  VectorField2D velocity_at(double t) const {
    const auto [k, theta] = locate(t);
    if (theta == 0.0) return samples_[k].field;
    return samples_[k].field * (1.0 - theta) + samples_[k + 1].field * theta;
  }

  Field2D divergence_at(double t) const {
    const auto [k, theta] = locate(t);
    if (theta == 0.0) return samples_[k].div_field;
    return samples_[k].div_field * (1.0 - theta) + samples_[k + 1].div_field * theta;
  }

 private:
  struct Sample {
    TrigInterpolant v1;
    TrigInterpolant v2;
    TrigInterpolant div;
    VectorField2D field;
    Field2D div_field;
  };

  static std::array<double, 3> sample_at(const Sample& s, double x1, double x2) {
    return {s.v1.value(x1, x2), s.v2.value(x1, x2), s.div.value(x1, x2)};
  }

  std::pair<std::size_t, double> locate(double t) const {
    if (times_.size() == 1 || t <= times_.front()) return {0, 0.0};
    if (t >= times_.back()) return {times_.size() - 1, 0.0};
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
    return {k, (t - times_[k]) / (times_[k + 1] - times_[k])};
  }

  std::vector<double> times_;
  std::optional<Grid> grid_;
  std::vector<Sample> samples_;
};

/// Particle paths stored at the requested output times. Positions are not
/// wrapped, so differences between neighbouring seeds stay meaningful;
/// wrapped() gives the position on the torus.
struct FlowMap {
  std::vector<Point> seeds;
  std::vector<double> times;
  std::vector<std::vector<Point>> positions;        // [time][seed]
  std::vector<std::vector<double>> div_integrals;   // int_0^t div v(s, X(s, y)) ds

  std::size_t time_index(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (std::abs(times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
    }
    throw InvalidArgument("flow map has no output at t=" + std::to_string(t));
  }

  static Point wrapped(Point p) {
    for (double& c : p) {
      c = std::fmod(c, kTwoPi);
      if (c < 0.0) c += kTwoPi;
    }
    return p;
  }
};

/// m x m seeds at (2 pi i / m, 2 pi j / m), row-major in i.
inline std::vector<Point> seed_grid(int m) {
  if (m < 2) throw InvalidArgument("seed grid needs m >= 2");
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(m) * m);
  const double h = kTwoPi / m;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) out.push_back({i * h, j * h});
  }
  return out;
}

struct FlowOptions {
  double dt = 1e-3;
  int threads = 1;
};

namespace detail {

struct PathState {
  double x1, x2, d;
};

/// One RK4 step of dX/ds = sign * v(t0 + sign * s, X), dD/ds = div v(...).
inline PathState rk4(const VelocitySeries& v, double t, double h, double sign, PathState s) {
  auto f = [&](double tt, const PathState& p) {
    const auto e = v.evaluate(tt, p.x1, p.x2);
    return PathState{sign * e[0], sign * e[1], e[2]};
  };
  const PathState k1 = f(t, s);
  const PathState k2 = f(t + sign * 0.5 * h, {s.x1 + 0.5 * h * k1.x1, s.x2 + 0.5 * h * k1.x2, 0.0});
  const PathState k3 = f(t + sign * 0.5 * h, {s.x1 + 0.5 * h * k2.x1, s.x2 + 0.5 * h * k2.x2, 0.0});
  const PathState k4 = f(t + sign * h, {s.x1 + h * k3.x1, s.x2 + h * k3.x2, 0.0});
  return {s.x1 + h / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
          s.x2 + h / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
          s.d + h / 6.0 * (k1.d + 2.0 * k2.d + 2.0 * k3.d + k4.d)};
}

/// Integrates from time t0 over |span| in direction sign, in uniform steps of
/// at most dt, reporting the state after each output offset.
template <class Out>
void integrate_path(const VelocitySeries& v, double t0, double sign, PathState s, const std::vector<double>& offsets,
                    double dt, Out&& out) {
  double done = 0.0;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double span = offsets[k] - done;
    if (span > 0.0) {
      const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(span / dt - 1e-9)));
      const double h = span / static_cast<double>(steps);
      for (long long m = 0; m < steps; ++m) {
        s = rk4(v, t0 + sign * (done + m * h), h, sign, s);
      }
      done = offsets[k];
    }
    out(k, s);
  }
}

}  // namespace detail

/// Forward flow map X(t, y) for the given seeds, stored at output_times
/// (which must be nondecreasing and start at or after 0).
inline FlowMap flow_map(const VelocitySeries& v, std::vector<Point> seeds, std::vector<double> output_times,
                        const FlowOptions& opt = {}) {
  if (!(opt.dt > 0.0)) throw InvalidArgument("flow_map needs dt > 0");
  if (output_times.empty()) throw InvalidArgument("flow_map needs output times");
  for (std::size_t k = 0; k < output_times.size(); ++k) {
    if (output_times[k] < 0.0 || (k > 0 && output_times[k] < output_times[k - 1])) {
      throw InvalidArgument("output times must be nonnegative and nondecreasing");
    }
  }
  FlowMap fm;
  fm.seeds = std::move(seeds);
  fm.times = std::move(output_times);
  fm.positions.assign(fm.times.size(), std::vector<Point>(fm.seeds.size()));
  fm.div_integrals.assign(fm.times.size(), std::vector<double>(fm.seeds.size()));
  detail::parallel_chunks(fm.seeds.size(), opt.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      detail::integrate_path(v, 0.0, 1.0, {fm.seeds[i][0], fm.seeds[i][1], 0.0}, fm.times, opt.dt,
                             [&](std::size_t k, const detail::PathState& s) {
                               fm.positions[k][i] = {s.x1, s.x2};
                               fm.div_integrals[k][i] = s.d;
                             });
    }
  });
  return fm;
}

/// Y(t, x): the foot at time 0 of the characteristic through x at time t,
/// by integrating the reversed-time ODE. Also returns the divergence integral
/// along that path.
struct InverseMap {
  std::vector<Point> feet;
  std::vector<double> div_integrals;
};

inline InverseMap inverse_flow(const VelocitySeries& v, const std::vector<Point>& points, double t,
                               const FlowOptions& opt = {}) {
  if (!(t >= 0.0)) throw InvalidArgument("inverse_flow needs t >= 0");
  InverseMap inv;
  inv.feet.resize(points.size());
  inv.div_integrals.resize(points.size());
  const std::vector<double> offsets{t};
  detail::parallel_chunks(points.size(), opt.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      detail::integrate_path(v, t, -1.0, {points[i][0], points[i][1], 0.0}, offsets, opt.dt,
                             [&](std::size_t, const detail::PathState& s) {
                               inv.feet[i] = {s.x1, s.x2};
                               inv.div_integrals[i] = s.d;
                             });
    }
  });
  return inv;
}

struct CharacteristicsOptions {
  double dt = 1e-3;
  int threads = 1;
  /// Largest tolerated |grad X| or |grad Y| (Frobenius) on the output grid.
  double max_deformation = 50.0;
};

/// rho(t, .) on the grid of rho0 from the solution formula along
/// characteristics; rho0 is evaluated off-grid through its trigonometric
/// interpolant.
inline Field2D transport_solve_characteristics(const Field2D& rho0, const VelocitySeries& v, double t,
                                               const CharacteristicsOptions& opt = {}) {
  require_same_grid(rho0.grid(), v.grid());
  const Grid& g = rho0.grid();
  const int n = g.n();
  std::vector<Point> pts;
  pts.reserve(g.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) pts.push_back({g.coordinate(i), g.coordinate(j)});
  }
  const InverseMap inv = inverse_flow(v, pts, t, {opt.dt, opt.threads});

  // Deformation guard from centred differences of the (unwrapped) feet.
  const double h = g.spacing();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& a = inv.feet[static_cast<std::size_t>((i + 1) % n) * n + j];
      const auto& b = inv.feet[static_cast<std::size_t>((i + n - 1) % n) * n + j];
      const auto& c = inv.feet[static_cast<std::size_t>(i) * n + (j + 1) % n];
      const auto& d = inv.feet[static_cast<std::size_t>(i) * n + (j + n - 1) % n];
      // Periodic wrap of the differences: feet move by less than pi between neighbours.
      auto diff = [](double p, double q, double shift) {
        double r = p - q - shift;
        r -= kTwoPi * std::round(r / kTwoPi);
        return r + shift;
      };
      const double y11 = diff(a[0], b[0], 2.0 * h) / (2.0 * h);
      const double y21 = diff(a[1], b[1], 0.0) / (2.0 * h);
      const double y12 = diff(c[0], d[0], 0.0) / (2.0 * h);
      const double y22 = diff(c[1], d[1], 2.0 * h) / (2.0 * h);
      const double det = y11 * y22 - y12 * y21;
      const double fro = std::sqrt(y11 * y11 + y12 * y12 + y21 * y21 + y22 * y22);
      worst = std::max(worst, fro);
      if (det != 0.0) worst = std::max(worst, fro / std::abs(det));
    }
  }
  if (!(worst <= opt.max_deformation)) {
    throw Error("characteristics resampling failed: flow-map deformation " + std::to_string(worst) +
                " exceeds the bound " + std::to_string(opt.max_deformation));
  }

  const TrigInterpolant r0(rho0);
  Field2D out(g);
  auto values = out.values();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Point y = FlowMap::wrapped(inv.feet[k]);
    values[k] = std::exp(-inv.div_integrals[k]) * r0.value(y[0], y[1]);
  }
  return out;
}

struct JacobianReport {
  double max_discrepancy = 0.0;
  double mean_discrepancy = 0.0;
};

/// Compares det(grad_y X) from centred differences over an m x m seed grid
/// (as produced by seed_grid) with exp(int div v) at output time t. The
/// default stencil is second order; stencil_order = 4 uses the five-point
/// centred stencil.
inline JacobianReport jacobian_check(const FlowMap& fm, double t, int stencil_order = 2) {
  if (stencil_order != 2 && stencil_order != 4) throw InvalidArgument("stencil_order must be 2 or 4");
  const std::size_t count = fm.seeds.size();
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
  if (static_cast<std::size_t>(m) * m != count) throw InvalidArgument("jacobian_check needs a square seed grid");
  if (m < 5) throw InvalidArgument("jacobian_check needs at least 5 x 5 seeds");
  const std::size_t k = fm.time_index(t);
  const auto& X = fm.positions[k];
  const double h = kTwoPi / m;
  JacobianReport rep;
  auto at = [&](int i, int j, int axis) {
    // Unwrap across the periodic seam: X(y + 2 pi e) = X(y) + 2 pi e.
    const int ii = ((i % m) + m) % m;
    const int jj = ((j % m) + m) % m;
    double val = X[static_cast<std::size_t>(ii) * m + jj][axis];
    if (axis == 0) val += kTwoPi * ((i - ii) / m);
    if (axis == 1) val += kTwoPi * ((j - jj) / m);
    return val;
  };
  auto d1 = [&](int i, int j, int axis) {
    if (stencil_order == 2) return (at(i + 1, j, axis) - at(i - 1, j, axis)) / (2.0 * h);
    return (8.0 * (at(i + 1, j, axis) - at(i - 1, j, axis)) - (at(i + 2, j, axis) - at(i - 2, j, axis))) / (12.0 * h);
  };
  auto d2 = [&](int i, int j, int axis) {
    if (stencil_order == 2) return (at(i, j + 1, axis) - at(i, j - 1, axis)) / (2.0 * h);
    return (8.0 * (at(i, j + 1, axis) - at(i, j - 1, axis)) - (at(i, j + 2, axis) - at(i, j - 2, axis))) / (12.0 * h);
  };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double jac = d1(i, j, 0) * d2(i, j, 1) - d2(i, j, 0) * d1(i, j, 1);
      const double d = std::abs(jac - std::exp(fm.div_integrals[k][static_cast<std::size_t>(i) * m + j]));
      rep.max_discrepancy = std::max(rep.max_discrepancy, d);
      rep.mean_discrepancy += d;
    }
  }
  rep.mean_discrepancy /= static_cast<double>(count);
  return rep;
}

// ---------------------------------------------------------------------------
// Trudinger inequality: int exp(delta |f - mean f|^2 / ||grad f||_2^2) dx.

inline double trudinger_probe(const Field2D& f, double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("trudinger_probe needs delta >= 0");
  const double grad2 = gradient_norm_squared(forward(f));
  if (!(grad2 > 0.0) || grad2 <= 1e-28 * std::max(1.0, l2_norm_squared(forward(f)))) {
    throw DegenerateInput("degenerate: Trudinger quotient undefined");
  }
  const double mean = f.mean();
  double s = 0.0;
  for (double x : f.values()) s += std::exp(delta * (x - mean) * (x - mean) / grad2);
  return s * f.grid().cell_area();
}

struct TrudingerSearch {
  double delta = 0.0;
  double worst_value = 0.0;
  int fields = 0;
};

/// Largest delta (to rel_tol) such that the probe stays below bound on a
/// corpus of seeded random band-limited fields.
inline TrudingerSearch trudinger_delta_search(const Grid& g, int corpus, int max_mode, double bound,
                                              std::uint64_t seed = 7, double delta_hi = 64.0,
                                              double rel_tol = 1e-6) {
  if (corpus < 1) throw InvalidArgument("corpus must be nonempty");
  if (!(bound > kTorusMeasure)) throw InvalidArgument("bound must exceed the torus measure");
  detail::UniformSource rng(seed);
  std::vector<Field2D> fields;
  for (int k = 0; k < corpus; ++k) fields.push_back(detail::random_band_limited(g, max_mode, rng));
  auto worst = [&](double d) {
    double w = 0.0;
    for (const auto& f : fields) w = std::max(w, trudinger_probe(f, d));
    return w;
  };
  double lo = 0.0;
  double hi = delta_hi;
  if (worst(hi) <= bound) return {hi, worst(hi), corpus};
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) <= bound ? lo : hi) = mid;
  }
  return {lo, worst(lo), corpus};
}

// ---------------------------------------------------------------------------
// Gradient estimate for transported densities: measures
//   lhs = sup_t ||grad rho(t)||_p
// against
//   (||grad rho0||_q + ||rho0||_inf sup_t ||int_0^t grad div v||_q)
//     * exp(C T int_0^T ||grad^2 v||_2^2) * exp(int_0^T ||div v||_inf),
// C = 9 m / (4 delta0), m = p q / (q - p).

struct DesjardinsReport {
  double lhs = 0.0;
  double grad_rho0_q = 0.0;
  double source_term = 0.0;        // ||rho0||_inf sup_t ||int grad div v||_q
  double hessian_exponent = 0.0;   // C T int ||grad^2 v||^2
  double divergence_exponent = 0.0;  // int ||div v||_inf
  double constant_c = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct DesjardinsOptions {
  double delta0 = 4.0 * std::numbers::pi;
  /// Times at which ||grad rho||_p is sampled (including 0 and T).
  int checkpoints = 11;
  /// Quadrature steps for the time integrals of v.
  int quadrature_steps = 200;
  CharacteristicsOptions characteristics;
};

inline DesjardinsReport desjardins_probe(const Field2D& rho0, const VelocitySeries& v, double p, double q, double T,
                                         const DesjardinsOptions& opt = {}) {
  if (!(p >= 1.0) || !(p < q)) throw InvalidArgument("desjardins_probe needs 1 <= p < q");
  if (!(T > 0.0)) throw InvalidArgument("desjardins_probe needs T > 0");
  if (!(opt.delta0 > 0.0)) throw InvalidArgument("delta0 must be positive");
  if (opt.checkpoints < 2 || opt.quadrature_steps < 1) throw InvalidArgument("need >= 2 checkpoints and >= 1 step");
  DesjardinsReport r;
  const double m = std::isinf(q) ? p : p * q / (q - p);
  r.constant_c = 9.0 * m / (4.0 * opt.delta0);

  for (int c = 0; c < opt.checkpoints; ++c) {
    const double t = T * c / (opt.checkpoints - 1);
    const Field2D rho = c == 0 ? rho0 : transport_solve_characteristics(rho0, v, t, opt.characteristics);
    r.lhs = std::max(r.lhs, lp_norm(gradient(rho), p));
  }
  r.grad_rho0_q = lp_norm(gradient(rho0), q);

  // Time integrals by the trapezoid rule on a uniform grid.
  const int steps = opt.quadrature_steps;
  const double h = T / steps;
  VectorField2D acc(rho0.grid());  // int_0^t grad div v (Eulerian)
  VectorField2D prev_gd = gradient(v.divergence_at(0.0));
  double sup_acc = 0.0;
  double hess = 0.0;
  double divmax = 0.0;
  auto hess_at = [&](double t) {
    const VectorSpectrum s = forward(v.velocity_at(t));
    return hessian_norm_squared(s.x) + hessian_norm_squared(s.y);
  };
  auto divinf_at = [&](double t) { return lp_norm(v.divergence_at(t), std::numeric_limits<double>::infinity()); };
  double prev_h = hess_at(0.0);
  double prev_d = divinf_at(0.0);
  for (int k = 1; k <= steps; ++k) {
    const double t = k * h;
    const VectorField2D gd = gradient(v.divergence_at(t));
    acc += (prev_gd + gd) * (0.5 * h);
    sup_acc = std::max(sup_acc, lp_norm(acc, q));
    const double hk = hess_at(t);
    const double dk = divinf_at(t);
    hess += 0.5 * h * (prev_h + hk);
    divmax += 0.5 * h * (prev_d + dk);
    prev_gd = gd;
    prev_h = hk;
    prev_d = dk;
  }
  r.source_term = lp_norm(rho0, std::numeric_limits<double>::infinity()) * sup_acc;
  r.hessian_exponent = r.constant_c * T * hess;
  r.divergence_exponent = divmax;
  r.rhs = (r.grad_rho0_q + r.source_term) * std::exp(r.hessian_exponent) * std::exp(r.divergence_exponent);
  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  return r;
}

}  // namespace vislim
