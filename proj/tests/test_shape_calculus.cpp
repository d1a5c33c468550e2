#include "kvshape/verification.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace kvshape;

namespace {

constexpr double R = 2.0;

ShapeParams blob() {
  ShapeParams p;
  p.center = Point(0.15, -0.1);
  p.r0 = 0.7;
  p.cos_coeffs = {0.0, 0.08};
  p.sin_coeffs = {0.04};
  return p;
}

Vector cosk(const Curve& c, int k) { return (k * c.param()).array().cos(); }
Vector sink(const Curve& c, int k) { return (k * c.param()).array().sin(); }

// Non-critical configuration: f and g are not a matched pair for this inclusion.
StateBundle mismatched(const Conductivity& sigma = {1.0, 5.0}, bool flip = false) {
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Curve inner = Curve::from_shape(blob(), 128);
  const Vector f = cosk(outer, 1) + 0.3 * sink(outer, 2);
  const Vector g = 0.45 * cosk(outer, 1) + 0.2 * cosk(outer, 3);
  return StateBundle(Geometry{outer, inner}, sigma, f, g, flip);
}

}  // namespace

TEST(FirstOrderJumps, DiskClosedForm) {
  const double rho = 0.75;
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Curve inner = Curve::circle(Point::Zero(), rho, 128);
  const oracle::ConcentricDisks o{R, rho, 1.0, 5.0, 1};
  const StateBundle b(Geometry{outer, inner}, {1.0, 5.0}, cosk(outer, 1), o.dn_outer() * cosk(outer, 1));
  const DeformationField h{Vector::Ones(128), Vector::Zero(128)};
  const JumpData j = first_order_jumps(b, BoundaryKind::dirichlet, h);
  // alpha = ([sigma]/sigma2) d_n u+ ; beta = [sigma] d/ds(u_s)
  EXPECT_LT((j.alpha - (-4.0 / 5.0) * o.dn_plus() * cosk(inner, 1)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((j.beta - (-4.0) * (-o.u_inner() / (rho * rho)) * cosk(inner, 1)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FirstOrderJumps, VanishForEqualConductivities) {
  const StateBundle b = mismatched({2.0, 2.0});
  const DeformationField h = mixed_test_field(b.inner());
  const JumpData j = first_order_jumps(b, BoundaryKind::neumann, h);
  EXPECT_EQ(j.alpha.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(j.beta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(KvValue, MatchesVolumeEnergyForEqualConductivities) {
  // sigma1 = sigma2 = s: u_d = (r/R) cos t, u_n = r^2 cos 2t / (4 s R) + const
  const double s = 2.5;
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Curve inner = Curve::from_shape(blob(), 128);
  const StateBundle b(Geometry{outer, inner}, {s, s}, cosk(outer, 1), 0.5 * cosk(outer, 2));
  const double grid = s * oracle::disk_energy_grid(R, {1.0 / R, -1.0 / (4.0 * s * R)}, {0.0, 0.0}, 400, 256);
  EXPECT_NEAR(kv_value(b), grid, 1e-5 * grid);
}

TEST(KvValue, VanishesOnMatchedData) {
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Curve inner = Curve::from_shape(blob(), 128);
  const Geometry g{outer, inner};
  const TransmissionSolution d = solve_dirichlet(g, {1.0, 5.0}, JumpData::zero(128), cosk(outer, 1));
  const StateBundle b(g, {1.0, 5.0}, cosk(outer, 1), d.dnu_outer);
  EXPECT_LT(std::abs(kv_value(b)), 1e-14);
  const StateBundle m = mismatched();
  EXPECT_GT(kv_value(m), 1e-3);
}

TEST(KvGradient, TangentialFieldsHaveZeroGradient) {
  const StateBundle b = mismatched();
  const DeformationField h{Vector::Zero(128), sink(b.inner(), 1) + cosk(b.inner(), 3)};
  EXPECT_EQ(kv_gradient(b, h), 0.0);
}

TEST(KvGradient, FlipReversesSign) {
  const StateBundle a = mismatched();
  const StateBundle b = mismatched({1.0, 5.0}, true);
  const DeformationField h = mixed_test_field(a.inner());
  EXPECT_DOUBLE_EQ(kv_gradient(a, h), -kv_gradient(b, h));
}

TEST(Taylor, KvFirstAndSecondOrder) {
  const StateBundle b = mismatched();
  const TaylorResult r = taylor_kv(b, mixed_test_field(b.inner()), default_taylor_steps());
  EXPECT_NEAR(r.slope_first, 2.0, 0.1);
  EXPECT_NEAR(r.slope_second, 3.0, 0.15);
}

TEST(Taylor, KvFirstAndSecondOrderLowContrast) {
  const StateBundle b = mismatched({1.0, 0.3});
  const TaylorResult r = taylor_kv(b, mixed_test_field(b.inner()), default_taylor_steps());
  EXPECT_NEAR(r.slope_first, 2.0, 0.1);
  EXPECT_NEAR(r.slope_second, 3.0, 0.15);
}

TEST(Taylor, StateDerivatives) {
  const StateBundle b = mismatched();
  const DeformationField h = mixed_test_field(b.inner());
  for (BoundaryKind k : {BoundaryKind::dirichlet, BoundaryKind::neumann}) {
    const TaylorResult r = taylor_states(b, h, Point(1.3, 0.4), Point(0.1, -0.05), default_taylor_steps(), k);
    EXPECT_NEAR(r.slope_first, 2.0, 0.1);
    EXPECT_NEAR(r.slope_second, 3.0, 0.15);
  }
}

TEST(Taylor, FlippedJumpBreaksTheExpansion) {
  const StateBundle b = mismatched({1.0, 5.0}, true);
  const TaylorResult r = taylor_kv(b, mixed_test_field(b.inner()), default_taylor_steps());
  EXPECT_LT(r.slope_first, 1.5);
}

TEST(KvHessian, Symmetric) {
  const StateBundle b = mismatched();
  const DeformationField h1 = mixed_test_field(b.inner());
  const DeformationField h2{cosk(b.inner(), 3) - 0.2 * sink(b.inner(), 1), 0.4 * cosk(b.inner(), 2)};
  const double a = kv_hessian(b, h1, h2);
  const double c = kv_hessian(b, h2, h1);
  EXPECT_NEAR(a, c, 1e-9 * (std::abs(a) + 1.0));
}

TEST(KvHessian, AgreesWithMaterialDerivativeForm) {
  const StateBundle b = mismatched();
  const DeformationField h1 = mixed_test_field(b.inner());
  const DeformationField h2{cosk(b.inner(), 2) + 0.3 * sink(b.inner(), 1), 0.2 * cosk(b.inner(), 1)};
  for (const auto& [x, y] : {std::pair{h1, h1}, std::pair{h1, h2}, std::pair{h2, h2}}) {
    const double ref = oracle::hessian_bilinear(b, x, y);
    EXPECT_NEAR(kv_hessian(b, x, y), ref, 1e-6 * (std::abs(ref) + 1e-3));
  }
}

TEST(KvHessian, EqualConductivitiesVanishIdentically) {
  const StateBundle b = mismatched({1.0, 1.0});
  const DeformationField h = mixed_test_field(b.inner());
  EXPECT_EQ(kv_gradient(b, h), 0.0);
  EXPECT_EQ(kv_hessian(b, h, h), 0.0);
}

TEST(EnergyJump, NormalDerivativeMatchesSeparatedSolution) {
  // concentric disks, f = cos 2t and a Neumann datum that is a multiple s of the matched one
  const double rho = 0.75;
  const int k = 2;
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Curve inner = Curve::circle(Point::Zero(), rho, 128);
  const oracle::ConcentricDisks o{R, rho, 1.0, 5.0, k};
  const double s = 0.6;
  const StateBundle b(Geometry{outer, inner}, {1.0, 5.0}, cosk(outer, k), s * o.dn_outer() * cosk(outer, k));
  const double A = o.A(), B = o.B(), C = o.C();
  const double kk = k;
  auto grad2_dr = [&](double w, double w1, double w2, double r, double c2, double s2) {
    return 2.0 * w1 * w2 * c2 + 2.0 * (kk * w / r) * (kk * w1 / r - kk * w / (r * r)) * s2;
  };
  const double r = rho;
  const double wp = B * std::pow(r, k) + C * std::pow(r, -k);
  const double wp1 = kk * (B * std::pow(r, k - 1) - C * std::pow(r, -k - 1));
  const double wp2 = kk * ((kk - 1) * B * std::pow(r, k - 2) + (kk + 1) * C * std::pow(r, -k - 2));
  const double wm = A * std::pow(r, k);
  const double wm1 = kk * A * std::pow(r, k - 1);
  const double wm2 = kk * (kk - 1) * A * std::pow(r, k - 2);
  const double scale = (1.0 - s) * (1.0 - s);
  Vector expected(128);
  for (Eigen::Index j = 0; j < 128; ++j) {
    const double t = inner.param()(j);
    const double c2 = std::pow(std::cos(kk * t), 2);
    const double s2 = std::pow(std::sin(kk * t), 2);
    expected(j) = scale * (1.0 * grad2_dr(wp, wp1, wp2, r, c2, s2) - 5.0 * grad2_dr(wm, wm1, wm2, r, c2, s2));
  }
  const Vector got = energy_jump_normal_derivative(b);
  EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + expected.cwiseAbs().maxCoeff()));
}

TEST(StateDerivative, RigidTranslationOfConcentricDisks) {
  // translating the inclusion by e_x: u'(x) = lim (u_t - u)/t, compare against finite differences of traces on d Omega
  const double rho = 0.75;
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Curve inner = Curve::circle(Point::Zero(), rho, 128);
  const Vector f = cosk(outer, 1);
  const StateBundle b(Geometry{outer, inner}, {1.0, 5.0}, f, 0.4 * f);
  PointSet ex = PointSet::Zero(128, 2);
  ex.col(0).setOnes();
  const DeformationField h = DeformationField::from_ambient(inner, ex);
  const TransmissionSolution d = solve_state_derivative(BoundaryKind::dirichlet, b, h);
  const double t = 1e-5;
  auto outer_flux = [&](double shift) {
    const Curve moved = Curve::circle(Point(shift, 0.0), rho, 128);
    return Vector(solve_dirichlet(Geometry{outer, moved}, {1.0, 5.0}, JumpData::zero(128), f).dnu_outer);
  };
  const Vector fd = (outer_flux(t) - outer_flux(-t)) / (2 * t);
  EXPECT_LT((d.dnu_outer - fd).cwiseAbs().maxCoeff(), 1e-6);
}
