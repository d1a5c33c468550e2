#include "kvshape/potential.hpp"

#include <gtest/gtest.h>

using namespace kvshape;

namespace {

ShapeParams wobbly() {
  ShapeParams p;
  p.center = Point(0.1, -0.05);
  p.r0 = 0.7;
  p.cos_coeffs = {0.05, 0.08};
  p.sin_coeffs = {0.0, 0.0, 0.03};
  return p;
}

}  // namespace

TEST(Kernels, NewtonianKernel) {
  EXPECT_DOUBLE_EQ(newtonian_kernel(Point(0, 0), Point(1, 0)), 0.0);
  const Point a(0.3, -1.2), b(2.0, 0.4);
  EXPECT_DOUBLE_EQ(newtonian_kernel(a, b), newtonian_kernel(b, a));
  EXPECT_THROW(newtonian_kernel(a, a), Error);
  EXPECT_THROW(normal_kernel(a, a, Point(1, 0)), Error);
}

TEST(Kernels, GaussFluxIdentity) {
  const Curve c = Curve::from_shape(wobbly(), 128);
  auto flux = [&](const Point& x) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) s += normal_kernel(x, c.node(j), c.normal(j)) * c.weights()(j);
    return s;
  };
  EXPECT_NEAR(flux(Point(0.1, 0.0)), 1.0, 1e-10);
  EXPECT_NEAR(flux(Point(0.3, 0.2)), 1.0, 1e-10);
  EXPECT_NEAR(flux(Point(2.0, 1.0)), 0.0, 1e-10);
}

TEST(DoubleLayer, GaussIdentityOnBoundary) {
  for (const Curve& c : {Curve::from_shape(wobbly(), 128), Curve::circle(Point::Zero(), 2.0, 128)}) {
    const Vector k1 = assemble_double_layer(c, false).apply(Vector::Ones(128));
    EXPECT_LT((k1.array() - 0.5).abs().maxCoeff(), 1e-10);
  }
}

TEST(DoubleLayer, CircleAnnihilatesNonConstantModes) {
  const Curve c = Curve::circle(Point::Zero(), 1.4, 128);
  const LayerOperator K = assemble_double_layer(c, false);
  for (int k = 1; k <= 6; ++k) {
    const Vector mode = (k * c.param()).array().cos();
    EXPECT_LT(K.apply(mode).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DoubleLayer, AdjointIsWeightedTranspose) {
  const Curve c = Curve::from_shape(wobbly(), 64);
  const Matrix K = assemble_double_layer(c, false).matrix;
  const Matrix Ks = assemble_double_layer(c, true).matrix;
  const Matrix W = c.weights().asDiagonal();
  EXPECT_LT((W * Ks - K.transpose() * W).cwiseAbs().maxCoeff(), 1e-14);
  const Curve outer = Curve::circle(Point::Zero(), 2.0, 48);
  const Matrix cross = assemble_double_layer(c, outer, false).matrix;
  const Matrix cross_adj = assemble_double_layer(outer, c, true).matrix;
  const Matrix Wo = outer.weights().asDiagonal();
  EXPECT_LT((W * cross_adj - cross.transpose() * Wo).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SingleLayer, CircleEigenvalues) {
  for (double R : {1.0, 0.75, 2.0}) {
    const Curve c = Curve::circle(Point(0.2, 0.1), R, 128);
    const LayerOperator S = assemble_single_layer(c);
    EXPECT_LT((S.apply(Vector::Ones(128)).array() - R * std::log(R)).abs().maxCoeff(), 1e-10);
    for (int k = 1; k <= 10; ++k) {
      const Vector cs = (k * c.param()).array().cos();
      const Vector sn = (k * c.param()).array().sin();
      EXPECT_LT((S.apply(cs) + (R / (2.0 * k)) * cs).cwiseAbs().maxCoeff(), 1e-10) << "k=" << k;
      EXPECT_LT((S.apply(sn) + (R / (2.0 * k)) * sn).cwiseAbs().maxCoeff(), 1e-10) << "k=" << k;
    }
  }
}

TEST(SingleLayer, WeightedSymmetry) {
  const Curve c = Curve::from_shape(wobbly(), 64);
  const Matrix S = assemble_single_layer(c).matrix;
  const Matrix W = c.weights().asDiagonal();
  const Matrix Winv = c.weights().cwiseInverse().asDiagonal();
  // S W^{-1} is the symmetric kernel matrix up to the log-rule weights, which are symmetric in i - j.
  const Matrix K = S * Winv;
  EXPECT_LT((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  (void)W;
}

TEST(SingleLayer, SpectralConvergenceOnPerturbedCurve) {
  // reference: same operator at N = 512 applied to a smooth density, compared at common nodes
  ShapeParams p = wobbly();
  auto apply = [&](Eigen::Index n) {
    const Curve c = Curve::from_shape(p, n);
    const Vector dens = (c.param().array().cos() + 0.3 * (2 * c.param()).array().sin()).matrix();
    return Vector(assemble_single_layer(c).apply(dens));
  };
  const Vector ref = apply(512);
  auto err = [&](Eigen::Index n) {
    const Vector v = apply(n);
    double e = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) e = std::max(e, std::abs(v(j) - ref(j * (512 / n))));
    return e;
  };
  const double e16 = err(16), e32 = err(32), e64 = err(64);
  EXPECT_LT(e32, 0.1 * e16);
  EXPECT_LT(e64, 1e-3 * e32 + 1e-13);
  EXPECT_LT(e64, 1e-9);
}

TEST(CrossBlocks, RejectIntersectingCurves) {
  const Curve a = Curve::circle(Point::Zero(), 1.0, 64);
  const Curve b = Curve::circle(Point(1.0, 0.0), 1.0, 64);
  try {
    assemble_single_layer(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::boundaries_intersect);
  }
  EXPECT_THROW(assemble_double_layer(a, b, false), Error);
  const Curve inner = Curve::circle(Point::Zero(), 0.5, 64);
  EXPECT_NO_THROW(assemble_single_layer(a, inner));
}

TEST(Assembly, WorkerCountDoesNotChangeBits) {
  const Curve c = Curve::from_shape(wobbly(), 128);
  const Curve o = Curve::circle(Point::Zero(), 2.0, 96);
  EXPECT_TRUE(assemble_single_layer(c, 1).matrix == assemble_single_layer(c, 4).matrix);
  EXPECT_TRUE(assemble_double_layer(c, false, 1).matrix == assemble_double_layer(c, false, 3).matrix);
  EXPECT_TRUE(assemble_single_layer(o, c, 1).matrix == assemble_single_layer(o, c, 4).matrix);
}
