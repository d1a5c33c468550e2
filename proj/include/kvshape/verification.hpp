#ifndef KVSHAPE_VERIFICATION_HPP
#define KVSHAPE_VERIFICATION_HPP

// Taylor-remainder checks of the shape derivatives against transported
// geometries (I + t h)(omega), and the small helpers they need.

#include "kvshape/optimizer.hpp"
#include "kvshape/spectral.hpp"

namespace kvshape {

/// Least-squares slope of log|r| against log t.
inline double loglog_slope(const std::vector<double>& t, const std::vector<double>& r) {
  const auto n = static_cast<double>(t.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = std::log(t[i]);
    const double y = std::log(std::max(std::abs(r[i]), 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline const std::vector<double>& default_taylor_steps() {
  static const std::vector<double> steps{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  return steps;
}

struct TaylorResult {
  std::vector<double> steps;
  std::vector<double> first;   // |F(t) - F(0) - t F'|
  std::vector<double> second;  // |F(t) - F(0) - t F' - t^2/2 F''|
  double slope_first = 0.0;
  double slope_second = 0.0;
  double scale = 0.0;          // |F(0)| + |F'| + |F''|, to recognise identically vanishing remainders
};

inline void finish_fit(TaylorResult& r) {
  r.slope_first = loglog_slope(r.steps, r.first);
  r.slope_second = loglog_slope(r.steps, r.second);
}

/// J along (I + t h) for fixed outer data, compared with DJ(h) and D^2 J(h, h).
inline TaylorResult taylor_kv(const StateBundle& b, const DeformationField& h, const std::vector<double>& steps) {
  TaylorResult r;
  r.steps = steps;
  const double J0 = kv_value(b);
  const double dj = kv_gradient(b, h);
  const double d2 = kv_hessian(b, h, h);
  r.scale = std::abs(J0) + std::abs(dj) + std::abs(d2);
  for (double t : steps) {
    const Geometry gt{b.outer(), Curve::from_nodes(transported_nodes(b.inner(), h, t))};
    const double Jt = kv_value(StateBundle(gt, b.sigma(), b.f(), b.g()));
    r.first.push_back(Jt - J0 - t * dj);
    r.second.push_back(Jt - J0 - t * dj - 0.5 * t * t * d2);
  }
  finish_fit(r);
  return r;
}

/// Interior values of the Dirichlet state at `annulus_point` and
/// `inclusion_point`, compared with u + t u' + t^2/2 u''. Remainders are the
/// larger of the two points.
inline TaylorResult taylor_states(const StateBundle& b, const DeformationField& h, const Point& annulus_point,
                                  const Point& inclusion_point, const std::vector<double>& steps,
                                  BoundaryKind kind = BoundaryKind::dirichlet) {
  const Geometry& g0 = b.geometry();
  const Eigen::Index ni = b.inner().size();
  auto eval = [&](const Geometry& g, const TransmissionSolution& s) {
    PointSet a(1, 2), c(1, 2);
    a.row(0) = annulus_point.transpose();
    c.row(0) = inclusion_point.transpose();
    return Eigen::Vector2d(harmonic_eval(g, Region::annulus, s, a)(0), harmonic_eval(g, Region::inclusion, s, c)(0));
  };
  auto solve = [&](const TransmissionSolver& s, const JumpData& j, bool homogeneous) {
    const Eigen::Index no = b.outer().size();
    if (kind == BoundaryKind::dirichlet) return s.solve_dirichlet(j, homogeneous ? Vector::Zero(no) : b.f());
    const Vector g1 = homogeneous ? Vector::Zero(no) : Vector(b.g() / b.sigma().sigma1);
    return s.solve_neumann(j, g1, homogeneous ? 0.0 : b.outer().integrate(b.f()));
  };
  const TransmissionSolution d1 = solve_state_derivative(kind, b, h);
  const TransmissionSolution d2 = solve(b.solver(), second_order_jumps(b, kind, d1, d1, h, h), true);
  const Eigen::Vector2d u0 = eval(g0, b.state(kind));
  const Eigen::Vector2d u1 = eval(g0, d1);
  const Eigen::Vector2d u2 = eval(g0, d2);
  TaylorResult r;
  r.steps = steps;
  r.scale = u0.cwiseAbs().maxCoeff() + u1.cwiseAbs().maxCoeff() + u2.cwiseAbs().maxCoeff();
  for (double t : steps) {
    const Geometry gt{b.outer(), Curve::from_nodes(transported_nodes(b.inner(), h, t))};
    const TransmissionSolver st(gt, b.sigma());
    const Eigen::Vector2d ut = eval(gt, solve(st, JumpData::zero(ni), false));
    const Eigen::Vector2d e1 = ut - u0 - t * u1;
    const Eigen::Vector2d e2 = e1 - 0.5 * t * t * u2;
    r.first.push_back(e1.cwiseAbs().maxCoeff());
    r.second.push_back(e2.cwiseAbs().maxCoeff());
  }
  finish_fit(r);
  return r;
}

/// J along a purely geometric tangential motion (I + t h_tau tau).
inline TaylorResult taylor_tangential(const StateBundle& b, const DeformationField& h, const std::vector<double>& steps) {
  DeformationField tang{Vector::Zero(b.inner().size()), h.tangential};
  TaylorResult r;
  r.steps = steps;
  const double J0 = kv_value(b);
  r.scale = std::abs(J0);
  for (double t : steps) {
    const Geometry gt{b.outer(), Curve::from_nodes(transported_nodes(b.inner(), tang, t))};
    r.first.push_back(kv_value(StateBundle(gt, b.sigma(), b.f(), b.g())) - J0);
    r.second.push_back(r.first.back());
  }
  finish_fit(r);
  return r;
}

/// A deterministic field with normal and tangential parts of comparable size.
inline DeformationField mixed_test_field(const Curve& c) {
  const Vector& t = c.param();
  DeformationField h;
  h.normal = (0.3 + 0.2 * (2.0 * t).array().cos() + 0.1 * t.array().sin()).matrix();
  h.tangential = (0.2 * t.array().sin() + 0.1 * (3.0 * t).array().cos()).matrix();
  return h;
}

/// Magnitude against which the gradient at a critical point is compared:
/// |[sigma]| int ((sigma1/sigma2)(d_n u+)^2 + |u_s|^2) |h_n| for both states.
inline double gradient_scale(const StateBundle& b, const DeformationField& h) {
  const double r = b.sigma().sigma1 / b.sigma().sigma2;
  Vector density = Vector::Zero(b.inner().size());
  for (BoundaryKind k : {BoundaryKind::dirichlet, BoundaryKind::neumann}) {
    const Vector& us = b.state_ds(k);
    density += r * b.state(k).dnu_plus.cwiseAbs2() + us.cwiseAbs2();
  }
  return std::abs(b.sigma().jump()) * b.inner().integrate(density.cwiseProduct(h.normal.cwiseAbs()));
}

}  // namespace kvshape

#endif  // KVSHAPE_VERIFICATION_HPP
