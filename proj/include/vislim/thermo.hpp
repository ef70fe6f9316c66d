#pragma once

// Barotropic pressure laws P(rho) with P(rho_bar) = 0, the pressure
// potential e(rho) = rho * int_{rho_bar}^{rho} P(t)/t^2 dt, the auxiliary
// K(rho) = rho P'(rho) - P(rho), and sampled convexity constants.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <variant>

#include "vislim/error.hpp"
#include "vislim/spectral.hpp"

namespace vislim {

struct GammaLaw {
  double a = 1.0;
  double gamma = 2.0;
};

struct CustomLaw {
  std::function<double(double)> pressure;
  std::function<double(double)> derivative;
};

class PressureLaw {
 public:
  /// P(rho) = a (rho^gamma - rho_bar^gamma).
  static PressureLaw gamma_law(double a, double gamma, double rho_bar) {
    if (!(a > 0.0) || !(gamma > 1.0)) throw InvalidArgument("gamma law needs a > 0 and gamma > 1");
    return PressureLaw(GammaLaw{a, gamma}, rho_bar);
  }

  /// Any C^1 law with P' > 0; P(rho_bar) must vanish.
  static PressureLaw custom(std::function<double(double)> p, std::function<double(double)> dp,
                            double rho_bar) {
    if (!p || !dp) throw InvalidArgument("custom law needs P and P'");
    if (std::abs(p(rho_bar)) > 1e-12 * (1.0 + std::abs(dp(rho_bar)) * rho_bar)) {
      throw InvalidArgument("custom law must satisfy P(rho_bar) = 0");
    }
    return PressureLaw(CustomLaw{std::move(p), std::move(dp)}, rho_bar);
  }

  double rho_bar() const { return rho_bar_; }
  bool is_gamma_law() const { return std::holds_alternative<GammaLaw>(kind_); }
  const GammaLaw* gamma_parameters() const { return std::get_if<GammaLaw>(&kind_); }

  double pressure(double rho) const {
    check(rho);
    if (const auto* g = gamma_parameters()) {
      return g->a * (std::pow(rho, g->gamma) - std::pow(rho_bar_, g->gamma));
    }
    return std::get<CustomLaw>(kind_).pressure(rho);
  }

  double derivative(double rho) const {
    check(rho);
    if (const auto* g = gamma_parameters()) return g->a * g->gamma * std::pow(rho, g->gamma - 1.0);
    return std::get<CustomLaw>(kind_).derivative(rho);
  }

  /// e(rho); closed form for the gamma law, Gauss-Kronrod quadrature otherwise.
  double internal_energy(double rho) const {
    check(rho);
    if (const auto* g = gamma_parameters()) return g->a * std::pow(rho_bar_, g->gamma) * gamma_energy(rho / rho_bar_, g->gamma);
    if (rho == rho_bar_) return 0.0;
    const auto& p = std::get<CustomLaw>(kind_).pressure;
    auto integrand = [&p](double t) { return p(t) / (t * t); };
    double error = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, rho_bar_, rho, 15, 1e-12, &error);
    return rho * integral;
  }

  double k_function(double rho) const { return rho * derivative(rho) - pressure(rho); }

 private:
  PressureLaw(std::variant<GammaLaw, CustomLaw> kind, double rho_bar) : kind_(std::move(kind)), rho_bar_(rho_bar) {
    if (!(rho_bar > 0.0)) throw InvalidArgument("reference density must be positive");
  }

  // (s^gamma - 1 - gamma (s - 1)) / (gamma - 1); a binomial series near s = 1
  // avoids the cancellation of the closed form.
  static double gamma_energy(double s, double gamma) {
    const double d = s - 1.0;
    if (std::abs(d) > 0.1) return (std::pow(s, gamma) - 1.0 - gamma * d) / (gamma - 1.0);
    double coef = gamma * (gamma - 1.0) / 2.0;
    double power = d * d;
    double sum = 0.0;
    for (int k = 2; k < 60; ++k) {
      const double term = coef * power;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      coef *= (gamma - k) / (k + 1.0);
      power *= d;
    }
    return sum / (gamma - 1.0);
  }

  static void check(double rho) {
    if (!(rho > 0.0)) throw NonpositiveDensity(rho);
  }

  std::variant<GammaLaw, CustomLaw> kind_;
  double rho_bar_;
};

namespace detail {

template <class F>
Field2D map_density(const Field2D& rho, F&& f, const char* what) {
  Field2D out(rho.grid());
  const int n = rho.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = rho(i, j);
      if (!(r > 0.0)) throw NonpositiveDensity(i, j, r, what);
      out(i, j) = f(r);
    }
  }
  return out;
}

}  // namespace detail

inline double pressure(const PressureLaw& law, double rho) { return law.pressure(rho); }
inline Field2D pressure(const PressureLaw& law, const Field2D& rho) {
  return detail::map_density(rho, [&](double r) { return law.pressure(r); }, "pressure");
}

inline double internal_energy(const PressureLaw& law, double rho) { return law.internal_energy(rho); }
inline Field2D internal_energy(const PressureLaw& law, const Field2D& rho) {
  return detail::map_density(rho, [&](double r) { return law.internal_energy(r); }, "internal_energy");
}

inline double k_function(const PressureLaw& law, double rho) { return law.k_function(rho); }
inline Field2D k_function(const PressureLaw& law, const Field2D& rho) {
  return detail::map_density(rho, [&](double r) { return law.k_function(r); }, "k_function");
}

/// Sampled bounds m_lower (e)/(rho - rho_bar)^2 >= m_lower and <= m_upper.
struct ConvexityBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t samples = 0;
  /// Value used at the removable singularity rho = rho_bar: P'(rho_bar)/(2 rho_bar).
  double value_at_reference = 0.0;
  /// Samples closer than this (relative) to rho_bar used value_at_reference.
  double singular_window = 0.0;
};

inline ConvexityBounds convexity_constants(const PressureLaw& law, double rho_lo, double rho_hi,
                                           std::size_t samples = 20001) {
  const double rb = law.rho_bar();
  if (!(0.0 < rho_lo && rho_lo < rb && rb < rho_hi)) {
    throw InvalidArgument("convexity interval must satisfy 0 < rho_lo < rho_bar < rho_hi");
  }
  samples = std::max<std::size_t>(samples, 10000);
  ConvexityBounds out;
  out.samples = samples;
  out.value_at_reference = law.derivative(rb) / (2.0 * rb);
  out.singular_window = 1e-6;
  out.lower = out.value_at_reference;
  out.upper = out.value_at_reference;
  for (std::size_t s = 0; s < samples; ++s) {
    const double rho = rho_lo + (rho_hi - rho_lo) * static_cast<double>(s) / static_cast<double>(samples - 1);
    const double d = rho - rb;
    const double ratio =
        std::abs(d) < out.singular_window * rb ? out.value_at_reference : law.internal_energy(rho) / (d * d);
    out.lower = std::min(out.lower, ratio);
    out.upper = std::max(out.upper, ratio);
  }
  return out;
}

}  // namespace vislim
