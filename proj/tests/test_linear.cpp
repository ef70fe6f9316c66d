#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>

#include "vislim/linear.hpp"

using namespace vislim;
using cd = std::complex<double>;

namespace {

// Full 3x3 per-mode generator of (eta, v1, v2) for
//   eta_t + rho_bar div v = 0,  rho_bar v_t = lap v + nu grad div v - c^2 grad eta.
Eigen::Matrix3cd generator(int k1, int k2, double nu, double rho_bar = 1.0, double c2 = 1.0) {
  const cd I{0.0, 1.0};
  const double kk = k1 * k1 + k2 * k2;
  Eigen::Matrix3cd a;
  a << 0.0, -I * rho_bar * double(k1), -I * rho_bar * double(k2),
      -I * c2 * double(k1) / rho_bar, -(kk + nu * k1 * k1) / rho_bar, -nu * k1 * k2 / rho_bar,
      -I * c2 * double(k2) / rho_bar, -nu * k1 * k2 / rho_bar, -(kk + nu * k2 * k2) / rho_bar;
  return a;
}

Eigen::Vector3cd expm_oracle(const LinearMode& m, double nu, double t, double rho_bar = 1.0, double c2 = 1.0) {
  const Eigen::Matrix3cd e = (generator(m.k1, m.k2, nu, rho_bar, c2) * t).exp();
  return e * Eigen::Vector3cd(m.eta, m.v1, m.v2);
}

double distance(const LinearMode& m, const Eigen::Vector3cd& v) {
  return std::max({std::abs(m.eta - v(0)), std::abs(m.v1 - v(1)), std::abs(m.v2 - v(2))});
}

}  // namespace

TEST(DispersionRoots, OverdampedExample) {
  const ModePair r = dispersion_roots(1.0, 3.0);
  EXPECT_NEAR(r.lambda_plus.real(), -2.0 + std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(r.lambda_minus.real(), -2.0 - std::sqrt(3.0), 1e-12);
  EXPECT_EQ(r.lambda_plus.imag(), 0.0);
}

TEST(DispersionRoots, UnderdampedExample) {
  const ModePair r = dispersion_roots(1.0, 0.0);
  EXPECT_NEAR(r.lambda_plus.real(), -0.5, 1e-14);
  EXPECT_NEAR(r.lambda_plus.imag(), std::sqrt(3.0) / 2.0, 1e-14);
  EXPECT_NEAR(r.lambda_minus.imag(), -std::sqrt(3.0) / 2.0, 1e-14);
}

TEST(DispersionRoots, SlowRootAtLargeNu) {
  const double nu = 1e6;
  const ModePair r = dispersion_roots(1.0, nu);
  EXPECT_NEAR(r.lambda_plus.real() / (-1.0 / (1.0 + nu)), 1.0, 1e-9);
}

TEST(DispersionRoots, VietaIdentities) {
  for (double k2 : {1.0, 2.0, 5.0, 25.0}) {
    for (double nu : {0.0, 0.3, 3.0, 1e2, 1e5}) {
      const ModePair r = dispersion_roots(k2, nu);
      const cd sum = r.lambda_plus + r.lambda_minus;
      const cd prod = r.lambda_plus * r.lambda_minus;
      EXPECT_LT(std::abs(sum + (1.0 + nu) * k2), 1e-12 * (1.0 + nu) * k2);
      EXPECT_LT(std::abs(prod - k2), 1e-12 * k2);
      EXPECT_LE(std::abs(r.lambda_plus.real()), std::abs(r.lambda_minus.real()));
    }
  }
}

TEST(DispersionRoots, RejectsBadInput) {
  EXPECT_THROW(dispersion_roots(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(dispersion_roots(1.0, -1.0), InvalidArgument);
  EXPECT_THROW(low_mach_roots(1.0, 1.0, 0.0), InvalidArgument);
}

TEST(LowMachRoots, Examples) {
  for (double k2 : {1.0, 4.0}) {
    const ModePair a = low_mach_roots(k2, 2.0, 1.0);
    const ModePair b = dispersion_roots(k2, 2.0);
    EXPECT_EQ(a.lambda_plus, b.lambda_plus);
    EXPECT_EQ(a.lambda_minus, b.lambda_minus);
  }
  const ModePair w = low_mach_roots(1.0, 0.0, 1e-3);
  EXPECT_NEAR(std::abs(w.lambda_plus.imag()) * 1e-3, 1.0, 0.01);
  const double nu = 5.0;
  const ModePair s = low_mach_roots(1.0, nu, 1e-4);
  EXPECT_NEAR(s.lambda_plus.real(), -(1.0 + nu) / 2.0, 1e-12);
}

TEST(EvolveLinear, SolenoidalModeDecaysIndependentlyOfNu) {
  for (double nu : {0.0, 10.0, 1e4}) {
    const LinearMode m{2, -1, 0.0, cd{1.0, 0.5}, cd{2.0, 1.0}};  // v parallel to (1, 2), perpendicular to k
    const LinearMode out = evolve_linear(m, nu, 0.7);
    EXPECT_LT(std::abs(out.eta), 1e-15);
    EXPECT_LT(std::abs(out.v1 - std::exp(-5.0 * 0.7) * m.v1), 1e-14);
    EXPECT_LT(std::abs(out.v2 - std::exp(-5.0 * 0.7) * m.v2), 1e-14);
  }
}

TEST(EvolveLinear, MatchesMatrixExponential) {
  const LinearMode modes[] = {{1, 0, cd{1.0, 0.0}, cd{0.0, 0.2}, 0.0},
                              {2, 1, cd{0.3, -0.1}, cd{0.5, 0.4}, cd{-0.2, 0.1}},
                              {-1, 3, cd{0.0, 1.0}, cd{1.0, 0.0}, cd{0.0, 0.0}}};
  for (const auto& m : modes) {
    for (double nu : {0.0, 0.5, 3.0, 10.0, 1e3}) {
      for (double t : {0.1, 1.0, 2.5}) {
        const auto ref = expm_oracle(m, nu, t);
        EXPECT_LT(distance(evolve_linear(m, nu, t), ref), 1e-10) << "nu=" << nu << " t=" << t;
      }
    }
  }
}

TEST(EvolveLinear, RescaledCoefficientsMatchMatrixExponential) {
  const LinearMode m{1, 1, cd{0.2, 0.0}, cd{0.1, 0.3}, cd{-0.4, 0.0}};
  const LinearCoefficients coef{1.3, 2.6};
  for (double nu : {0.0, 7.0}) {
    const auto ref = expm_oracle(m, nu, 1.0, coef.rho_bar, coef.sound_speed_sq);
    EXPECT_LT(distance(evolve_linear(m, nu, 1.0, coef), ref), 1e-10);
  }
}

TEST(EvolveLinear, AcousticModeIsRootCombination) {
  // eta(t) = A e^{l+ t} + B e^{l- t} with eta(0) = 1, eta'(0) = -i k.v = 0.
  for (double nu : {0.0, 3.0, 100.0}) {
    const ModePair r = dispersion_roots(1.0, nu);
    const cd lp = r.lambda_plus;
    const cd lm = r.lambda_minus;
    const cd a = -lm / (lp - lm);
    const cd b = lp / (lp - lm);
    const LinearMode out = evolve_linear(LinearMode{1, 0, 1.0, 0.0, 0.0}, nu, 1.0);
    EXPECT_LT(std::abs(out.eta - (a * std::exp(lp) + b * std::exp(lm))), 1e-10);
  }
}

TEST(EvolveLinear, DensityFreezesAtLargeNu) {
  const double nu = 1e4;
  const LinearMode out = evolve_linear(LinearMode{1, 0, 1.0, 0.0, 0.0}, nu, 1.0);
  EXPECT_NEAR(out.eta.real(), std::exp(-1.0 / (1.0 + nu)), 1e-3);
}

TEST(EvolveLinear, SlowModeContrast) {
  double prev = 0.0;
  for (double nu : {1.0, 10.0, 100.0, 1e3, 1e4}) {
    const double ratio = std::abs(evolve_linear(LinearMode{1, 0, 1.0, 0.0, 0.0}, nu, 1.0).eta);
    EXPECT_GT(ratio, prev);
    EXPECT_LT(ratio, 1.0);
    prev = ratio;
  }
  prev = 2.0;
  for (double t : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    const double ratio = std::abs(evolve_linear(LinearMode{1, 0, 1.0, 0.0, 0.0}, 10.0, t).eta);
    EXPECT_LT(ratio, prev);
    prev = ratio;
  }
  EXPECT_LT(prev, 1e-30);
}

TEST(EvolveLinear, ZeroModeIsStationary) {
  const LinearMode m{0, 0, cd{2.0, 0.0}, cd{0.5, 0.0}, cd{-0.5, 0.0}};
  const LinearMode out = evolve_linear(m, 5.0, 3.0);
  EXPECT_EQ(out.eta, m.eta);
  EXPECT_EQ(out.v1, m.v1);
}
