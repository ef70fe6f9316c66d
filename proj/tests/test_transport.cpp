#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "vislim/transport.hpp"
#include "vislim/transport_cases.hpp"

using namespace vislim;
using namespace vislim::test;

namespace {

VectorField2D sampled(const Grid& g, double (*a)(double, double), double (*b)(double, double)) {
  return {Field2D::sample(g, a), Field2D::sample(g, b)};
}

double zero(double, double) { return 0.0; }
double sin_x1(double x1, double) { return std::sin(x1); }
double sin_x2(double, double x2) { return std::sin(x2); }
double smooth_rho0(double x1, double x2) {
  return 1.0 + 0.3 * std::cos(x1 + 0.4) + 0.2 * std::sin(x2) * std::cos(x1);
}

double torus_gap(const Point& a, const Point& b) {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double d = std::remainder(a[k] - b[k], kTwoPi);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TEST(FlowMap, ZeroVelocityIsIdentity) {
  const Grid g(32);
  const VelocitySeries v(VectorField2D{g});
  const auto seeds = seed_grid(8);
  const FlowMap fm = flow_map(v, seeds, {0.5, 1.0});
  for (const auto& row : fm.positions) {
    for (std::size_t k = 0; k < seeds.size(); ++k) EXPECT_EQ(torus_gap(row[k], seeds[k]), 0.0);
  }
}

TEST(FlowMap, ConstantVelocityTranslates) {
  const Grid g(32);
  const VelocitySeries v(VectorField2D{Field2D(g, 0.3), Field2D(g, -0.7)});
  const auto seeds = seed_grid(8);
  const FlowMap fm = flow_map(v, seeds, {2.0});
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    EXPECT_LT(torus_gap(fm.positions[0][k], {seeds[k][0] + 0.6, seeds[k][1] - 1.4}), 1e-12);
  }
}

TEST(FlowMap, ShearMatchesExactSolution) {
  const Grid g(32);
  const VelocitySeries v(sampled(g, sin_x2, zero));
  const auto seeds = seed_grid(16);
  const FlowMap fm = flow_map(v, seeds, {1.0, 3.0});
  for (std::size_t i = 0; i < fm.times.size(); ++i) {
    const double t = fm.times[i];
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      EXPECT_LT(torus_gap(fm.positions[i][k], {seeds[k][0] + t * std::sin(seeds[k][1]), seeds[k][1]}), 1e-8);
    }
  }
}

TEST(FlowMap, GroupProperty) {
  const Grid g(32);
  const VelocitySeries v(VectorField2D{Field2D::sample(g, [](double x1, double x2) { return std::sin(x1) + 0.5 * std::cos(x2); }),
                                       Field2D::sample(g, [](double x1, double x2) { return 0.3 * std::sin(x1 + x2); })});
  const auto seeds = seed_grid(12);
  const double s = 0.4003;
  const double t = 0.6011;
  const FlowMap direct = flow_map(v, seeds, {s + t});
  const FlowMap first = flow_map(v, seeds, {s});
  const FlowMap second = flow_map(v, first.positions[0], {t});
  double err = 0.0;
  for (std::size_t k = 0; k < seeds.size(); ++k) err = std::max(err, torus_gap(direct.positions[0][k], second.positions[0][k]));
  EXPECT_LT(err, 1e-6);
}

TEST(FlowMap, InvalidOptions) {
  const Grid g(16);
  const VelocitySeries v(VectorField2D{g});
  EXPECT_THROW(flow_map(v, seed_grid(4), {1.0}, {0.0, 1}), InvalidArgument);
  EXPECT_THROW(flow_map(v, seed_grid(4), {}), InvalidArgument);
  EXPECT_THROW(seed_grid(1), InvalidArgument);
  EXPECT_THROW(VelocitySeries({0.0, 0.0}, {VectorField2D{g}, VectorField2D{g}}), InvalidArgument);
}

TEST(VelocitySeries, InterpolatesLinearlyInTime) {
  const Grid g(16);
  const VelocitySeries v({0.0, 1.0}, {VectorField2D{Field2D(g, 1.0), Field2D(g, 0.0)},
                                      VectorField2D{Field2D(g, 3.0), Field2D(g, 2.0)}});
  const auto a = v.evaluate(0.25, 0.3, 1.1);
  EXPECT_NEAR(a[0], 1.5, 1e-14);
  EXPECT_NEAR(a[1], 0.5, 1e-14);
  EXPECT_NEAR(v.evaluate(-1.0, 0.0, 0.0)[0], 1.0, 1e-14);
  EXPECT_NEAR(v.evaluate(5.0, 0.0, 0.0)[0], 3.0, 1e-14);
}

TEST(Characteristics, DivergenceFreeFlowTransportsValues) {
  // Shear: a(t, y) = a0(y), so rho(t, x) = rho0(x1 - t sin x2, x2).
  const Grid g(32);
  const Field2D rho0 = Field2D::sample(g, smooth_rho0);
  const VelocitySeries v(sampled(g, sin_x2, zero));
  const double t = 0.7;
  const Field2D rho = transport_solve_characteristics(rho0, v, t);
  const Field2D exact = Field2D::sample(g, [t](double x1, double x2) { return smooth_rho0(x1 - t * std::sin(x2), x2); });
  EXPECT_LT(max_abs_diff(rho, exact), 1e-10);
}

TEST(Characteristics, ShearMatchesSpectralSolve) {
  const Grid g(64);
  const Field2D rho0 = Field2D::sample(g, smooth_rho0);
  const Field2D rho = transport_solve_characteristics(rho0, VelocitySeries(sampled(g, sin_x2, zero)), 0.5);
  const Field2D ref = spectral_continuity_solve(Grid(256), sin_x2, zero, smooth_rho0, 0.5, 1e-3);
  EXPECT_LT(l2_distance_on_coarse(rho, ref), 1e-6);
}

TEST(Characteristics, CompressionMatchesSpectralSolve) {
  const Grid g(64);
  const Field2D rho0 = Field2D::sample(g, smooth_rho0);
  const Field2D rho = transport_solve_characteristics(rho0, VelocitySeries(sampled(g, sin_x1, zero)), 0.5);
  const Field2D ref = spectral_continuity_solve(Grid(256), sin_x1, zero, smooth_rho0, 0.5, 1e-3);
  EXPECT_LT(l2_distance_on_coarse(rho, ref), 1e-6);
}

TEST(Characteristics, UniformDensityGivesInverseJacobian) {
  // rho0 = 1 under v = (sin x1, 0): rho(t, X(t, y)) = 1 / J(t, y) with tan(X/2) = e^t tan(y/2).
  const Grid g(64);
  const double t = 0.5;
  const Field2D rho = transport_solve_characteristics(Field2D(g, 1.0), VelocitySeries(sampled(g, sin_x1, zero)), t);
  for (int i = 0; i < g.n(); ++i) {
    const double x = g.coordinate(i);
    const double y = 2.0 * std::atan2(std::exp(-t) * std::sin(0.5 * x), std::cos(0.5 * x));
    const double c = std::cos(0.5 * y);
    const double s = std::sin(0.5 * y);
    const double jac = std::exp(t) / (c * c + std::exp(2.0 * t) * s * s);
    EXPECT_NEAR(rho(i, 5), 1.0 / jac, 1e-10);
  }
  EXPECT_NEAR(rho.integral(), kTorusMeasure, 1e-8 * kTorusMeasure);
}

TEST(Characteristics, MassConserved) {
  const Grid g(64);
  const Field2D rho0 = Field2D::sample(g, smooth_rho0);
  const VelocitySeries v(VectorField2D{Field2D::sample(g, [](double x1, double x2) { return 0.6 * std::sin(x1) * std::cos(x2); }),
                                       Field2D::sample(g, [](double x1, double x2) { return 0.4 * std::sin(x2 + 0.2) + 0.1 * std::cos(x1); })});
  const Field2D rho = transport_solve_characteristics(rho0, v, 0.4);
  EXPECT_NEAR(rho.integral() / rho0.integral(), 1.0, 1e-8);
}

TEST(Characteristics, IndependentOfThreadCount) {
  const Grid g(32);
  const Field2D rho0 = Field2D::sample(g, smooth_rho0);
  const VelocitySeries v(sampled(g, sin_x1, sin_x2));
  const Field2D one = transport_solve_characteristics(rho0, v, 0.3, {1e-3, 1});
  const Field2D three = transport_solve_characteristics(rho0, v, 0.3, {1e-3, 3});
  EXPECT_EQ(max_abs_diff(one, three), 0.0);
  const FlowMap a = flow_map(v, seed_grid(10), {0.3}, {1e-3, 1});
  const FlowMap b = flow_map(v, seed_grid(10), {0.3}, {1e-3, 4});
  EXPECT_EQ(a.positions, b.positions);
}

TEST(Characteristics, ExcessiveDeformationIsReported) {
  const Grid g(32);
  CharacteristicsOptions opt;
  opt.max_deformation = 1.5;
  EXPECT_THROW(transport_solve_characteristics(Field2D(g, 1.0), VelocitySeries(sampled(g, sin_x1, zero)), 2.0, opt),
               Error);
}

TEST(Jacobian, DivergenceFreeFlowHasUnitJacobian) {
  const Grid g(32);
  const FlowMap fm = flow_map(VelocitySeries(sampled(g, sin_x2, zero)), seed_grid(64), {1.0});
  EXPECT_LE(jacobian_check(fm, 1.0).max_discrepancy, 1e-6);
}

TEST(Jacobian, CompressiveFlowAt128Seeds) {
  const Grid g(64);
  const FlowMap fm = flow_map(VelocitySeries(sampled(g, sin_x1, zero)), seed_grid(128), {0.3});
  EXPECT_LE(jacobian_check(fm, 0.3).max_discrepancy, 1e-4);
}

TEST(Jacobian, SecondOrderSeedRefinement) {
  const Grid g(64);
  const VelocitySeries v(sampled(g, sin_x1, zero));
  const double coarse = jacobian_check(flow_map(v, seed_grid(32), {0.3}), 0.3).max_discrepancy;
  const double mid = jacobian_check(flow_map(v, seed_grid(64), {0.3}), 0.3).max_discrepancy;
  const double fine = jacobian_check(flow_map(v, seed_grid(128), {0.3}), 0.3).max_discrepancy;
  EXPECT_GE(coarse / mid, 4.0);
  EXPECT_GE(mid / fine, 4.0);
}

TEST(Jacobian, FourthOrderStencilConverges) {
  const Grid g(64);
  const FlowMap fm = flow_map(VelocitySeries(sampled(g, sin_x1, zero)), seed_grid(64), {0.3});
  EXPECT_LE(jacobian_check(fm, 0.3, 4).max_discrepancy, 1e-5);
  EXPECT_THROW(jacobian_check(fm, 0.3, 3), InvalidArgument);
  EXPECT_THROW(jacobian_check(fm, 0.7), InvalidArgument);
}

TEST(Trudinger, ZeroDeltaGivesTorusMeasure) {
  const Grid g(64);
  EXPECT_NEAR(trudinger_probe(random_field(g, 4), 0.0), kTorusMeasure, 1e-12);
}

TEST(Trudinger, SineClosedForm) {
  // With f = sin x1 the integral is 4 pi^2 e^a I0(a), a = delta / (4 pi^2).
  const Field2D f = Field2D::sample(Grid(512), sin_x1);
  for (double delta : {1.0, 4.0, 10.0, 30.0}) {
    const double a = delta / kTorusMeasure;
    const double ref = kTorusMeasure * std::exp(a) * std::cyl_bessel_i(0.0, a);
    EXPECT_NEAR(trudinger_probe(f, delta), ref, 1e-10 * ref);
  }
}

TEST(Trudinger, GridRefinementLimit) {
  double prev = 0.0;
  for (int n : {64, 128, 256, 512}) {
    const double v = trudinger_probe(Field2D::sample(Grid(n), [](double x1, double x2) { return std::sin(x1) + 0.5 * std::cos(2 * x2); }), 8.0);
    if (prev > 0.0) EXPECT_NEAR(v, prev, 1e-10 * v);
    prev = v;
  }
}

TEST(Trudinger, ConstantFieldIsDegenerate) {
  const Grid g(32);
  EXPECT_THROW(trudinger_probe(Field2D(g, 2.5), 1.0), DegenerateInput);
  EXPECT_THROW(trudinger_probe(Field2D::sample(g, sin_x1), -1.0), InvalidArgument);
}

TEST(Trudinger, DeltaSearchIsSharp) {
  const Grid g(64);
  const double bound = 2.0 * kTorusMeasure;
  const TrudingerSearch s = trudinger_delta_search(g, 16, 4, bound);
  EXPECT_LE(s.worst_value, bound);
  detail::UniformSource rng(7);
  double above = 0.0;
  for (int k = 0; k < 16; ++k) above = std::max(above, trudinger_probe(detail::random_band_limited(g, 4, rng), s.delta * 1.001));
  EXPECT_GT(above, bound);
  EXPECT_THROW(trudinger_delta_search(g, 4, 4, 0.5 * kTorusMeasure), InvalidArgument);
}

TEST(Desjardins, ZeroVelocityRatioBoundedByMeasureFactor) {
  const Grid g(32);
  const Field2D rho0 = Field2D::sample(g, [](double x1, double x2) { return 1.0 + 0.3 * std::cos(x1) * std::sin(x2); });
  DesjardinsOptions opt;
  opt.checkpoints = 3;
  opt.quadrature_steps = 10;
  const auto r = desjardins_probe(rho0, VelocitySeries(VectorField2D{g}), 2.0, 4.0, 1.0, opt);
  EXPECT_NEAR(r.lhs, lp_norm(gradient(rho0), 2.0), 1e-12);
  EXPECT_EQ(r.source_term, 0.0);
  EXPECT_EQ(r.hessian_exponent, 0.0);
  EXPECT_LE(r.ratio, std::pow(kTorusMeasure, 0.5 - 0.25) * (1.0 + 1e-12));
}

TEST(Desjardins, DivergenceFreeVelocityHasNoSourceTerm) {
  const Grid g(32);
  const Field2D rho0 = Field2D::sample(g, [](double x1, double) { return 1.0 + 0.2 * std::cos(x1); });
  DesjardinsOptions opt;
  opt.checkpoints = 4;
  opt.quadrature_steps = 20;
  const auto r = desjardins_probe(rho0, VelocitySeries(sampled(g, sin_x2, zero)), 2.0, 4.0, 1.0, opt);
  EXPECT_LT(r.source_term, 1e-12);
  EXPECT_LT(r.divergence_exponent, 1e-12);
  EXPECT_TRUE(std::isfinite(r.ratio));
  EXPECT_GT(r.ratio, 0.0);
}

TEST(Desjardins, ShearFamilyRatioStaysBounded) {
  const Grid g(32);
  const Field2D rho0 = Field2D::sample(g, [](double x1, double x2) { return 1.0 + 0.3 * std::cos(x1) * std::sin(x2); });
  DesjardinsOptions opt;
  opt.checkpoints = 6;
  opt.quadrature_steps = 50;
  const double measure_factor = std::pow(kTorusMeasure, 0.5 - 0.25);
  for (double a : {0.25, 0.5, 1.0, 2.0}) {
    const VelocitySeries v(VectorField2D{
        Field2D::sample(g, [a](double x1, double x2) { return a * (std::sin(x2) + 0.5 * std::sin(x1)); }),
        Field2D::sample(g, [a](double x1, double) { return a * 0.5 * std::cos(x1); })});
    const auto r = desjardins_probe(rho0, v, 2.0, 4.0, 1.0, opt);
    EXPECT_TRUE(std::isfinite(r.ratio)) << "a=" << a;
    EXPECT_LE(r.ratio, measure_factor) << "a=" << a;
  }
}

TEST(Desjardins, InvalidExponents) {
  const Grid g(16);
  const Field2D rho0(g, 1.0);
  const VelocitySeries v(VectorField2D{g});
  EXPECT_THROW(desjardins_probe(rho0, v, 4.0, 4.0, 1.0), InvalidArgument);
  EXPECT_THROW(desjardins_probe(rho0, v, 4.0, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(desjardins_probe(rho0, v, 0.5, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(desjardins_probe(rho0, v, 2.0, 4.0, 0.0), InvalidArgument);
}

TEST(TransportCases, UnknownCaseAndCsvShape) {
  EXPECT_THROW(transport_case("nope"), InvalidArgument);
  const std::string csv = transport_csv("zero", transport_case("zero"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "case,probe,value,reference,abs_error");
  EXPECT_NE(csv.find("zero,max_displacement,0,0,0"), std::string::npos);
}
