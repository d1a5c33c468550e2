#include "kvshape/optimizer.hpp"

#include <gtest/gtest.h>

using namespace kvshape;

namespace {

constexpr double R = 2.0;

ShapeParams target_shape() {
  ShapeParams p;
  p.center = Point(0.2, 0.0);
  p.r0 = 0.75;
  p.cos_coeffs = {0.0, 0.08};
  return p;
}

InverseProblem problem_for(const ShapeParams& target) {
  const Curve outer = Curve::circle(Point::Zero(), R, 128);
  const Conductivity sigma{1.0, 5.0};
  const Vector f = outer.param().array().cos();
  const Geometry g{outer, Curve::from_shape(target, 128)};
  const Vector flux = sigma.sigma1 * TransmissionSolver(g, sigma).solve_dirichlet(JumpData::zero(128), f).dnu_outer;
  return InverseProblem{outer, sigma, AdmissibleRegion{Point::Zero(), R, 0.1}, f, flux, 128};
}

}  // namespace

TEST(BasisSpec, SizesAndLabels) {
  const BasisSpec b{3, true};
  EXPECT_EQ(b.size(), 9u);
  EXPECT_EQ(b.label(0), "r0");
  EXPECT_EQ(b.label(1), "cos1");
  EXPECT_EQ(b.label(6), "sin3");
  EXPECT_EQ(b.label(7), "tx");
  EXPECT_EQ(b.label(8), "ty");
  EXPECT_EQ((BasisSpec{2, false}).size(), 5u);
}

TEST(UpdateShape, Examples) {
  const ShapeParams c = ShapeParams::circle(Point::Zero(), 0.7);
  const BasisSpec b{2, true};
  Vector d = Vector::Zero(7);
  d(0) = 1.0;
  EXPECT_NEAR(update_shape(c, b, d, 0.05).r0, 0.75, 1e-15);
  d.setZero();
  d(5) = 1.0;
  const ShapeParams moved = update_shape(c, b, d, 0.3);
  EXPECT_NEAR(moved.center.x(), 0.3, 1e-15);
  d.setZero();
  d(3) = 1.0;
  EXPECT_NEAR(update_shape(c, b, d, 0.1).cos_coeffs[1], 0.1, 1e-15);
  const ShapeParams same = update_shape(c, b, Vector::Zero(7), 1.0);
  for (double t : {0.0, 1.0, 2.5, 4.0}) EXPECT_EQ(same.point(t), c.point(t));
}

TEST(UpdateShape, RejectsInadmissibleSteps) {
  const ShapeParams c = ShapeParams::circle(Point::Zero(), 0.7);
  const BasisSpec b{2, true};
  Vector d = Vector::Zero(7);
  d(0) = -1.0;
  try {
    update_shape(c, b, d, 0.8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::step_inadmissible);
  }
  d.setZero();
  d(5) = 1.0;
  EXPECT_THROW(update_shape(c, b, d, 1.3, AdmissibleRegion{Point::Zero(), 2.0, 0.1}), Error);
  EXPECT_NO_THROW(update_shape(c, b, d, 1.1, AdmissibleRegion{Point::Zero(), 2.0, 0.1}));
  EXPECT_THROW(update_shape(c, b, Vector::Zero(3), 1.0), Error);
}

TEST(BasisFields, RadialFieldSplitsIntoFrame) {
  const Curve c = Curve::circle(Point(0.1, 0.2), 0.7, 64);
  const auto fields = basis_fields(c, BasisSpec{2, true});
  ASSERT_EQ(fields.size(), 7u);
  EXPECT_LT((fields[0].normal.array() - 1.0).abs().maxCoeff(), 1e-14);
  EXPECT_LT(fields[0].tangential.cwiseAbs().maxCoeff(), 1e-14);
  // translation e_x on a circle: normal part cos t, tangential part -sin t
  EXPECT_LT((fields[5].normal - Vector(c.param().array().cos())).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((fields[5].tangential + Vector(c.param().array().sin())).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Assembly, GradientMatchesFiniteDifferencesInParameters) {
  const InverseProblem p = problem_for(target_shape());
  const ShapeParams s = ShapeParams::circle(Point(0.05, 0.02), 0.7);
  const BasisSpec basis{2, true};
  const GradientHessian gh = assemble_gradient_and_hessian(make_bundle(p, s), basis, false);
  const double t = 1e-5;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(basis.size()); ++i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
    e(i) = 1.0;
    const double fd = (kv_value(make_bundle(p, update_shape(s, basis, e, t))) -
                       kv_value(make_bundle(p, update_shape(s, basis, e, -t)))) / (2 * t);
    EXPECT_NEAR(gh.gradient(i), fd, 1e-6 * (1.0 + std::abs(fd))) << basis.label(static_cast<std::size_t>(i));
  }
}

TEST(Assembly, HessianIsSymmetricAndThreadIndependent) {
  const InverseProblem p = problem_for(target_shape());
  const StateBundle b = make_bundle(p, ShapeParams::circle(Point(0.05, 0.02), 0.7));
  const BasisSpec basis{2, true};
  const GradientHessian one = assemble_gradient_and_hessian(b, basis, true, 1);
  const GradientHessian four = assemble_gradient_and_hessian(b, basis, true, 4);
  EXPECT_TRUE(one.hessian == four.hessian);
  EXPECT_TRUE(one.gradient == four.gradient);
  const double scale = one.hessian.cwiseAbs().maxCoeff();
  EXPECT_LT((one.hessian - one.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-7 * scale);
}

TEST(LmDirection, LargeDampingApproachesSteepestDescent) {
  Matrix H(2, 2);
  H << 3.0, 1.0, 1.0, 2.0;
  const Vector g = Vector::Ones(2);
  const Vector d = lm_direction(H, g, 1e8);
  const double cosine = -d.dot(g) / (d.norm() * g.norm());
  EXPECT_NEAR(cosine, 1.0, 1e-7);
  const Vector newton = lm_direction(H, g, 0.0);
  EXPECT_LT((H * newton + g).norm(), 1e-14);
}

TEST(Reconstruct, StartingAtTheTargetStopsImmediately) {
  const ShapeParams t = target_shape();
  const InverseProblem p = problem_for(t);
  OptimizerOptions o;
  o.basis = {2, true};
  const RunHistory h = reconstruct(p, t, o);
  EXPECT_EQ(h.iterates.size(), 1u);
  EXPECT_EQ(h.status.rfind("converged", 0), 0u);
}

TEST(Reconstruct, DescentDecreasesJMonotonically) {
  const InverseProblem p = problem_for(target_shape());
  OptimizerOptions o;
  o.mode = OptimizerMode::descent;
  o.basis = {2, true};
  o.max_iter = 6;
  const RunHistory h = reconstruct(p, ShapeParams::circle(Point::Zero(), 0.75), o);
  ASSERT_EQ(h.iterates.size(), 7u);
  for (std::size_t i = 1; i < h.iterates.size(); ++i) {
    EXPECT_LT(h.iterates[i].J, h.iterates[i - 1].J);
    EXPECT_GT(h.iterates[i].step, 0.0);
  }
  EXPECT_EQ(h.status, "stopped: max_iter reached");
}

TEST(Reconstruct, LevenbergMarquardtRecoversARigidShift) {
  const ShapeParams t = ShapeParams::circle(Point(0.25, -0.1), 0.7);
  const InverseProblem p = problem_for(t);
  OptimizerOptions o;
  o.basis = {0, true};  // with first modes present a shift is not identifiable from r0, cos1, sin1, tx, ty
  o.max_iter = 40;
  const RunHistory h = reconstruct(p, ShapeParams::circle(Point::Zero(), 0.7), o);
  EXPECT_LT(h.last().J, 1e-10);
  EXPECT_NEAR(h.last().params.center.x(), 0.25, 1e-3);
  EXPECT_NEAR(h.last().params.center.y(), -0.1, 1e-3);
  EXPECT_NEAR(h.last().params.r0, 0.7, 1e-3);
}

TEST(Reconstruct, FrozenHessianAlsoDecreases) {
  const InverseProblem p = problem_for(target_shape());
  OptimizerOptions o;
  o.mode = OptimizerMode::frozen;
  o.basis = {2, true};
  o.max_iter = 8;
  const RunHistory h = reconstruct(p, ShapeParams::circle(Point::Zero(), 0.75), o);
  for (std::size_t i = 1; i < h.iterates.size(); ++i) EXPECT_LE(h.iterates[i].J, h.iterates[i - 1].J);
  EXPECT_LT(h.last().J, 0.1 * h.iterates.front().J);
}
