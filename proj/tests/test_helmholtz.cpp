#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "vislim/helmholtz.hpp"

using namespace vislim;
using namespace vislim::test;

TEST(Helmholtz, GradientIsFixedPointOfQ) {
  const Grid g(32);
  const Field2D phi = Field2D::sample(g, [](double x1, double x2) { return std::sin(x1 + 2 * x2); });
  const VectorField2D v = gradient(phi);
  EXPECT_LT(max_abs_diff(q_project(v), v), 1e-12);
}

TEST(Helmholtz, CurlIsAnnihilatedByQ) {
  const Grid g(32);
  const Field2D psi = Field2D::sample(g, [](double x1, double) { return std::cos(3 * x1); });
  const VectorField2D v{-derivative(psi, 2), derivative(psi, 1)};
  EXPECT_LT(max_abs(q_project(v).x), 1e-12);
  EXPECT_LT(max_abs(q_project(v).y), 1e-12);
}

TEST(Helmholtz, ShearPlusGradientSplits) {
  const Grid g(32);
  // v = (sin x2 + cos x1, 0): the gradient part is grad(sin x1).
  const VectorField2D v{Field2D::sample(g, [](double x1, double x2) { return std::sin(x2) + std::cos(x1); }), Field2D(g)};
  const VectorField2D q = q_project(v);
  EXPECT_LT(max_abs_diff(q.x, Field2D::sample(g, [](double x1, double) { return std::cos(x1); })), 1e-13);
  EXPECT_LT(max_abs(q.y), 1e-13);
}

TEST(Helmholtz, ModeByModeProjectorOracle) {
  const Grid g(16);
  const VectorField2D v = random_vector(g, 5, 5);
  const VectorField2D q = q_project(v);
  const auto cx = naive_dft(v.x);
  const auto cy = naive_dft(v.y);
  const auto qx = naive_dft(q.x);
  const auto qy = naive_dft(q.y);
  const int n = g.n();
  for (int p = 0; p < n; ++p) {
    for (int r = 0; r < n; ++r) {
      const std::size_t idx = static_cast<std::size_t>(p) * n + r;
      const double k1 = p == n / 2 ? 0 : g.wavenumber(p);
      const double k2 = r == n / 2 ? 0 : g.wavenumber(r);
      const double kk = k1 * k1 + k2 * k2;
      std::complex<double> ex{}, ey{};
      if (kk > 0) {
        const auto dot = k1 * cx[idx] + k2 * cy[idx];
        ex = k1 * dot / kk;
        ey = k2 * dot / kk;
      }
      EXPECT_LT(std::abs(qx[idx] - ex), 1e-13);
      EXPECT_LT(std::abs(qy[idx] - ey), 1e-13);
    }
  }
}

TEST(Helmholtz, ConstantFieldBelongsToP) {
  const Grid g(16);
  const VectorField2D v{Field2D(g, 0.7), Field2D(g, -1.3)};
  EXPECT_LT(max_abs_diff(p_project(v), v), 1e-15);
  EXPECT_LT(max_abs(q_project(v).x), 1e-15);
}

TEST(Helmholtz, PropertiesOnRandomFields) {
  const Grid g(32);
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const VectorField2D v = random_vector(g, seed, 10);
    const VectorField2D p = p_project(v);
    const VectorField2D q = q_project(v);
    const double scale = std::max(1.0, max_abs_diff(v, VectorField2D(g)));
    EXPECT_LT(max_abs(divergence(p)), 1e-12 * scale);
    EXPECT_LT(max_abs_diff(q_project(q), q), 1e-12 * scale);
    EXPECT_LT(max_abs_diff(p_project(p), p), 1e-12 * scale);
    EXPECT_LT(max_abs_diff(p + q, v), 4e-16 * scale);
    EXPECT_LT(std::abs(l2_inner(p, q)), 1e-12 * l2_inner(v, v));
    const double vv = l2_inner(v, v);
    EXPECT_NEAR(vv, l2_inner(p, p) + l2_inner(q, q), 1e-10 * vv);
  }
}
