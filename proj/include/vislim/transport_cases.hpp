#pragma once

// Named synthetic scenarios for the transport checks, each producing rows of
// (case, probe, value, reference, abs_error). A NaN reference means the
// probe is a measurement without a closed-form counterpart.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "vislim/io.hpp"
#include "vislim/transport.hpp"

namespace vislim {

struct TransportCheckRow {
  std::string probe;
  double value = 0.0;
  double reference = std::numeric_limits<double>::quiet_NaN();
  double abs_error() const { return std::isnan(reference) ? reference : std::abs(value - reference); }
};

namespace detail {

inline double torus_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    double d = std::fmod(a[k] - b[k], kTwoPi);
    if (d > std::numbers::pi) d -= kTwoPi;
    if (d < -std::numbers::pi) d += kTwoPi;
    s += d * d;
  }
  return std::sqrt(s);
}

inline VectorField2D sampled(const Grid& g, std::function<double(double, double)> a,
                             std::function<double(double, double)> b) {
  return {Field2D::sample(g, a), Field2D::sample(g, b)};
}

/// Jacobian of the flow of v = (sin x1, 0), where tan(X/2) = e^t tan(y/2).
inline double sine_jacobian(double y, double t) {
  const double c = std::cos(0.5 * y);
  const double s = std::sin(0.5 * y);
  return std::exp(t) / (c * c + std::exp(2.0 * t) * s * s);
}

}  // namespace detail

inline std::vector<TransportCheckRow> transport_case(const std::string& name, int threads = 1) {
  using detail::sampled;
  std::vector<TransportCheckRow> rows;
  const Grid g(64);
  const FlowOptions fo{1e-3, threads};

  if (name == "zero") {
    const VelocitySeries v(VectorField2D{g});
    const auto seeds = seed_grid(16);
    const FlowMap fm = flow_map(v, seeds, {0.0, 1.0}, fo);
    double err = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) err = std::max(err, detail::torus_distance(fm.positions[1][k], seeds[k]));
    rows.push_back({"max_displacement", err, 0.0});
  } else if (name == "constant") {
    const double c1 = 0.3;
    const double c2 = -0.7;
    const VelocitySeries v(sampled(g, [=](double, double) { return c1; }, [=](double, double) { return c2; }));
    const auto seeds = seed_grid(16);
    const FlowMap fm = flow_map(v, seeds, {0.0, 2.0}, fo);
    double err = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      err = std::max(err, detail::torus_distance(fm.positions[1][k], {seeds[k][0] + 2.0 * c1, seeds[k][1] + 2.0 * c2}));
    }
    rows.push_back({"max_position_error", err, 0.0});
  } else if (name == "shear") {
    const VelocitySeries v(sampled(g, [](double, double x2) { return std::sin(x2); }, [](double, double) { return 0.0; }));
    const auto seeds = seed_grid(32);
    const double t = 1.0;
    const FlowMap fm = flow_map(v, seeds, {0.0, t}, fo);
    double err = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const Point exact{seeds[k][0] + t * std::sin(seeds[k][1]), seeds[k][1]};
      err = std::max(err, detail::torus_distance(fm.positions[1][k], exact));
    }
    rows.push_back({"max_position_error", err, 0.0});
    rows.push_back({"jacobian_discrepancy", jacobian_check(fm, t).max_discrepancy, 0.0});
  } else if (name == "compressive") {
    const VelocitySeries v(sampled(g, [](double x1, double) { return std::sin(x1); }, [](double, double) { return 0.0; }));
    const double t = 0.5;
    // rho0 = 1 gives rho(t, X(t, y)) = 1 / J(t, y).
    const Field2D one(g, 1.0);
    const Field2D rho = transport_solve_characteristics(one, v, t, {1e-3, threads});
    double err = 0.0;
    for (int i = 0; i < g.n(); ++i) {
      const double x = g.coordinate(i);
      const double y = 2.0 * std::atan2(std::exp(-t) * std::sin(0.5 * x), std::cos(0.5 * x));
      err = std::max(err, std::abs(rho(i, 0) - 1.0 / detail::sine_jacobian(y, t)));
    }
    rows.push_back({"max_density_error", err, 0.0});
    rows.push_back({"mass_drift", std::abs(rho.integral() / one.integral() - 1.0), 0.0});
    double prev = 0.0;
    for (int m : {32, 64, 128}) {
      const FlowMap fm = flow_map(v, seed_grid(m), {0.0, 0.3}, fo);
      const double d = jacobian_check(fm, 0.3).max_discrepancy;
      rows.push_back({"jacobian_discrepancy_m" + std::to_string(m), d, 0.0});
      if (prev > 0.0) rows.push_back({"jacobian_order_m" + std::to_string(m), std::log2(prev / d), 2.0});
      prev = d;
    }
    const FlowMap fm = flow_map(v, seed_grid(128), {0.0, 0.3}, fo);
    rows.push_back({"jacobian_discrepancy_m128_stencil4", jacobian_check(fm, 0.3, 4).max_discrepancy, 0.0});
  } else if (name == "group") {
    const VelocitySeries v(sampled(
        g, [](double x1, double x2) { return std::sin(x1) + 0.5 * std::cos(x2); },
        [](double x1, double x2) { return 0.3 * std::sin(x1 + x2); }));
    const auto seeds = seed_grid(16);
    const double s = 0.4;
    const double t = 0.6;
    const FlowMap direct = flow_map(v, seeds, {s + t}, fo);
    const FlowMap first = flow_map(v, seeds, {s}, fo);
    const FlowMap second = flow_map(v, first.positions[0], {t}, fo);
    double err = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) err = std::max(err, detail::torus_distance(direct.positions[0][k], second.positions[0][k]));
    rows.push_back({"group_property_error", err, 0.0});
  } else if (name == "trudinger") {
    const Grid fine(512);
    const Field2D f = Field2D::sample(fine, [](double x1, double) { return std::sin(x1); });
    for (double delta : {0.0, 1.0, 4.0, 10.0}) {
      // 4 pi^2 e^a I_0(a) with a = delta / (4 pi^2)
      const double a = delta / kTorusMeasure;
      const double ref = kTorusMeasure * std::exp(a) * std::cyl_bessel_i(0.0, a);
      rows.push_back({"sin_x1_delta_" + format_number(delta), trudinger_probe(f, delta), ref});
    }
    const TrudingerSearch s = trudinger_delta_search(g, 32, 4, 2.0 * kTorusMeasure);
    rows.push_back({"delta_search_K_2x_measure", s.delta});
    rows.push_back({"delta_search_worst_value", s.worst_value, 2.0 * kTorusMeasure});
  } else if (name == "desjardins") {
    const Field2D rho0 = Field2D::sample(g, [](double x1, double x2) { return 1.0 + 0.3 * std::cos(x1) * std::sin(x2); });
    const TrudingerSearch s = trudinger_delta_search(g, 32, 4, 2.0 * kTorusMeasure);
    DesjardinsOptions opt;
    opt.delta0 = s.delta;
    opt.characteristics.threads = threads;
    {
      const VelocitySeries zero(VectorField2D{g});
      const auto r = desjardins_probe(rho0, zero, 2.0, 4.0, 1.0, opt);
      rows.push_back({"zero_velocity_ratio", r.ratio, std::pow(kTorusMeasure, 1.0 / 2.0 - 1.0 / 4.0)});
    }
    for (double a : {0.25, 0.5, 1.0}) {
      const VelocitySeries v(sampled(
          g, [a](double x1, double x2) { return a * (std::sin(x2) + 0.5 * std::sin(x1)); },
          [a](double x1, double) { return a * 0.5 * std::cos(x1); }));
      const auto r = desjardins_probe(rho0, v, 2.0, 4.0, 1.0, opt);
      rows.push_back({"shear_" + format_number(a) + "_lhs", r.lhs});
      rows.push_back({"shear_" + format_number(a) + "_rhs", r.rhs});
      rows.push_back({"shear_" + format_number(a) + "_ratio", r.ratio});
    }
  } else {
    throw InvalidArgument("unknown transport case '" + name + "'");
  }
  return rows;
}

inline const std::vector<std::string>& transport_case_names() {
  static const std::vector<std::string> names = {"zero", "constant", "shear", "compressive", "group", "trudinger", "desjardins"};
  return names;
}

inline std::string transport_csv(const std::string& name, const std::vector<TransportCheckRow>& rows) {
  std::string out = "case,probe,value,reference,abs_error\n";
  for (const auto& r : rows) {
    out += name + "," + r.probe + "," + format_number(r.value) + "," + format_number(r.reference) + "," +
           format_number(r.abs_error()) + "\n";
  }
  return out;
}

}  // namespace vislim
