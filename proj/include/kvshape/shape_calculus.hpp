#ifndef KVSHAPE_SHAPE_CALCULUS_HPP
#define KVSHAPE_SHAPE_CALCULUS_HPP

// First and second shape derivatives of the two states and of the
// Kohn-Vogelius criterion J(omega) = int_Omega sigma |grad(u_d - u_n)|^2.
// Everything is expressed through traces on d omega; no volume quantity is
// ever formed.

#include "kvshape/transmission.hpp"

#include <memory>

namespace kvshape {

/// Solved states on one geometry together with the measurement pair.
class StateBundle {
 public:
  StateBundle(std::shared_ptr<const TransmissionSolver> solver, Vector f, Vector g, bool flip_jump_sign = false)
      : solver_(std::move(solver)), f_(std::move(f)), g_(std::move(g)), flip_(flip_jump_sign) {
    auto states = solve_states(*solver_, f_, g_);
    u_d_ = std::move(states.u_d);
    u_n_ = std::move(states.u_n);
    const Curve& c = inner();
    ud_s_ = c.d_ds(u_d_.u_plus);
    un_s_ = c.d_ds(u_n_.u_plus);
  }

  StateBundle(const Geometry& geom, Conductivity sigma, Vector f, Vector g, bool flip_jump_sign = false)
      : StateBundle(std::make_shared<const TransmissionSolver>(geom, sigma), std::move(f), std::move(g), flip_jump_sign) {}

  const TransmissionSolver& solver() const { return *solver_; }
  std::shared_ptr<const TransmissionSolver> solver_ptr() const { return solver_; }
  const Geometry& geometry() const { return solver_->geometry(); }
  const Curve& inner() const { return solver_->geometry().inner; }
  const Curve& outer() const { return solver_->geometry().outer; }
  const Conductivity& sigma() const { return solver_->conductivity(); }
  const Vector& f() const { return f_; }
  const Vector& g() const { return g_; }
  const TransmissionSolution& u_d() const { return u_d_; }
  const TransmissionSolution& u_n() const { return u_n_; }
  const TransmissionSolution& state(BoundaryKind k) const { return k == BoundaryKind::dirichlet ? u_d_ : u_n_; }
  const Vector& state_ds(BoundaryKind k) const { return k == BoundaryKind::dirichlet ? ud_s_ : un_s_; }

  /// [sigma] as used by every derivative formula. The debug flag reverses the
  /// jump orientation, which must break the Taylor checks.
  double jump() const { return flip_ ? -sigma().jump() : sigma().jump(); }
  bool flipped() const { return flip_; }

 private:
  std::shared_ptr<const TransmissionSolver> solver_;
  Vector f_, g_;
  bool flip_;
  TransmissionSolution u_d_, u_n_;
  Vector ud_s_, un_s_;
};

/// Shape derivatives u_d'(h) and u_n'(h).
struct DerivativeBundle {
  TransmissionSolution d;
  TransmissionSolution n;

  const TransmissionSolution& of(BoundaryKind k) const { return k == BoundaryKind::dirichlet ? d : n; }
};

/// Interface data of u'(h): alpha = ([sigma]/sigma2) h_n d_n u+ and
/// beta = [sigma] d/ds(h_n du/ds).
inline JumpData first_order_jumps(const StateBundle& bundle, BoundaryKind kind, const DeformationField& h) {
  const Curve& c = bundle.inner();
  h.check(c);
  const TransmissionSolution& u = bundle.state(kind);
  const double jump = bundle.jump();
  const double s1 = bundle.sigma().sigma1;
  const double s2 = bundle.sigma().sigma2;
  JumpData j;
  j.alpha = (jump / s2) * h.normal.cwiseProduct(u.dnu_plus);
  // Same quantity from the interior flux; the two agree when the state is flux-continuous.
  const Vector alt = (jump / s1) * h.normal.cwiseProduct(u.dnu_minus);
  const double scale = 1.0 + j.alpha.cwiseAbs().maxCoeff();
  if ((j.alpha - alt).cwiseAbs().maxCoeff() > 1e-6 * scale) {
    throw Error(ErrorCode::ill_conditioned, "state flux is not continuous across the interface");
  }
  j.beta = jump * c.d_ds(h.normal.cwiseProduct(bundle.state_ds(kind)));
  return j;
}

inline TransmissionSolution solve_state_derivative(BoundaryKind kind, const StateBundle& bundle, const DeformationField& h) {
  const JumpData j = first_order_jumps(bundle, kind, h);
  const Eigen::Index no = bundle.outer().size();
  if (kind == BoundaryKind::dirichlet) return bundle.solver().solve_dirichlet(j, Vector::Zero(no));
  return bundle.solver().solve_neumann(j, Vector::Zero(no), 0.0);
}

inline DerivativeBundle solve_state_derivatives(const StateBundle& bundle, const DeformationField& h) {
  return {solve_state_derivative(BoundaryKind::dirichlet, bundle, h),
          solve_state_derivative(BoundaryKind::neumann, bundle, h)};
}

/// Interface data of the second derivative u''(h1, h2). Symmetric in (1, 2).
inline JumpData second_order_jumps(const StateBundle& bundle, BoundaryKind kind, const TransmissionSolution& d1,
                                   const TransmissionSolution& d2, const DeformationField& h1,
                                   const DeformationField& h2) {
  const Curve& c = bundle.inner();
  h1.check(c);
  h2.check(c);
  const TransmissionSolution& u = bundle.state(kind);
  const double jump = bundle.jump();
  const double s1 = bundle.sigma().sigma1;
  const double s2 = bundle.sigma().sigma2;
  const Vector& kappa = c.curvature();

  const Vector cross_nn = h1.normal.cwiseProduct(h2.normal);
  const Vector cross_tt = h1.tangential.cwiseProduct(h2.tangential);
  const Vector mixed = h1.tangential.cwiseProduct(c.d_ds(h2.normal)) + h2.tangential.cwiseProduct(c.d_ds(h1.normal));

  // [d_n u] and [sigma du/ds] with the oriented bracket
  const double sign = bundle.flipped() ? -1.0 : 1.0;
  const Vector dn_jump = sign * (u.dnu_plus - u.dnu_minus);
  const Vector sigma_us = jump * bundle.state_ds(kind);
  auto flux_jump = [&](const TransmissionSolution& d) {
    return Vector(sign * (d.dnu_plus - d.dnu_minus));
  };
  auto tangential_flux_jump = [&](const TransmissionSolution& d) {
    return Vector(sign * (s1 * c.d_ds(d.u_plus) - s2 * c.d_ds(d.u_minus)));
  };

  JumpData j;
  j.alpha = (kappa.cwiseProduct(cross_nn - cross_tt) + mixed).cwiseProduct(dn_jump) -
            h1.normal.cwiseProduct(flux_jump(d2)) - h2.normal.cwiseProduct(flux_jump(d1));
  const Vector inner_field = h2.normal.cwiseProduct(tangential_flux_jump(d1)) +
                             h1.normal.cwiseProduct(tangential_flux_jump(d2)) +
                             (kappa.cwiseProduct(cross_tt - cross_nn) - mixed).cwiseProduct(sigma_us);
  j.beta = c.d_ds(inner_field);
  return j;
}

/// J by the boundary reduction int_{d Omega} (f - u_n)(sigma1 d_n u_d - g) ds.
inline double kv_value(const StateBundle& b) {
  const Vector flux_mismatch = b.sigma().sigma1 * b.u_d().dnu_outer - b.g();
  return b.outer().integrate((b.f() - b.u_n().u_outer).cwiseProduct(flux_mismatch));
}

/// grad w+ . grad w- on d omega, for a state that is continuous across it.
inline Vector interface_product(const StateBundle& b, BoundaryKind kind) {
  const TransmissionSolution& u = b.state(kind);
  const Vector& us = b.state_ds(kind);
  return us.cwiseProduct(us) + u.dnu_plus.cwiseProduct(u.dnu_minus);
}

/// DJ(h) = -[sigma] int { (sigma1/sigma2)((d_n u_d+)^2 - (d_n u_n+)^2)
///                        + |grad_tau u_d|^2 - |grad_tau u_n|^2 } h_n ds.
inline double kv_gradient(const StateBundle& b, const DeformationField& h) {
  const Curve& c = b.inner();
  h.check(c);
  const double r = b.sigma().sigma1 / b.sigma().sigma2;
  const TransmissionSolution& ud = b.u_d();
  const TransmissionSolution& un = b.u_n();
  const Vector& uds = b.state_ds(BoundaryKind::dirichlet);
  const Vector& uns = b.state_ds(BoundaryKind::neumann);
  const Vector density = r * (ud.dnu_plus.array().square() - un.dnu_plus.array().square()).matrix() +
                         (uds.array().square() - uns.array().square()).matrix();
  return -b.jump() * c.integrate(density.cwiseProduct(h.normal));
}

/// Traces of v = u_d - u_n and their arclength derivatives on d omega.
struct DifferenceTraces {
  Vector v, v_s, v_ss;        // continuous trace
  Vector dn_plus, dn_minus;   // normal derivatives on each side
  Vector dn_plus_s, dn_minus_s;
};

inline DifferenceTraces difference_traces(const StateBundle& b) {
  const Curve& c = b.inner();
  DifferenceTraces t;
  t.v = b.u_d().u_plus - b.u_n().u_plus;
  t.v_s = c.d_ds(t.v);
  t.v_ss = c.d_ds(t.v_s);
  t.dn_plus = b.u_d().dnu_plus - b.u_n().dnu_plus;
  t.dn_minus = b.u_d().dnu_minus - b.u_n().dnu_minus;
  t.dn_plus_s = c.d_ds(t.dn_plus);
  t.dn_minus_s = c.d_ds(t.dn_minus);
  return t;
}

/// [sigma |grad v|^2] on d omega.
inline Vector energy_jump(const StateBundle& b) {
  const DifferenceTraces t = difference_traces(b);
  const double s1 = b.sigma().sigma1;
  const double s2 = b.sigma().sigma2;
  const Vector tan2 = t.v_s.cwiseProduct(t.v_s);
  return s1 * (tan2 + t.dn_plus.cwiseProduct(t.dn_plus)) - s2 * (tan2 + t.dn_minus.cwiseProduct(t.dn_minus));
}

/// d_n [sigma |grad v|^2] reconstructed from traces. On each side
/// d_n |grad v|^2 = 2 d_n v d_nn v + 2 v_s (D^2 v tau).n, with
/// d_nn v = -v_ss - kappa d_n v and (D^2 v tau).n = (d_n v)_s - kappa v_s.
inline Vector energy_jump_normal_derivative(const StateBundle& b) {
  constexpr double kappa_sign = -1.0;
  const DifferenceTraces t = difference_traces(b);
  const Vector& kappa = b.inner().curvature();
  auto side = [&](const Vector& dn, const Vector& dn_s) {
    const Vector dnn = -t.v_ss - kappa.cwiseProduct(dn);
    const Vector cross = dn_s + kappa_sign * kappa.cwiseProduct(t.v_s);
    return Vector(2.0 * dn.cwiseProduct(dnn) + 2.0 * t.v_s.cwiseProduct(cross));
  };
  return b.sigma().sigma1 * side(t.dn_plus, t.dn_plus_s) - b.sigma().sigma2 * side(t.dn_minus, t.dn_minus_s);
}

/// D^2 J(h1, h2) from the five interface integrals. The second derivatives of
/// the states enter only through their explicit interface jumps.
inline double kv_hessian(const StateBundle& b, const DeformationField& h1, const DeformationField& h2,
                         const DerivativeBundle& d1, const DerivativeBundle& d2) {
  const Curve& c = b.inner();
  h1.check(c);
  h2.check(c);
  const double s1 = b.sigma().sigma1;
  const double s2 = b.sigma().sigma2;
  const Vector& kappa = c.curvature();
  const DifferenceTraces t = difference_traces(b);

  const Vector nn = h1.normal.cwiseProduct(h2.normal);
  const Vector mixed = h1.tangential.cwiseProduct(c.d_ds(h2.normal)) + h2.tangential.cwiseProduct(c.d_ds(h1.normal));
  const Vector tt = kappa.cwiseProduct(h1.tangential.cwiseProduct(h2.tangential));

  const double t1 = c.integrate(energy_jump(b).cwiseProduct(mixed - tt));
  const double t2 = -0.5 * c.integrate(energy_jump_normal_derivative(b).cwiseProduct(nn));

  // grad v . grad v'_i on each side
  auto dot_side = [&](const DerivativeBundle& d, bool plus) {
    const Vector vp = plus ? Vector(d.d.u_plus - d.n.u_plus) : Vector(d.d.u_minus - d.n.u_minus);
    const Vector dvp = plus ? Vector(d.d.dnu_plus - d.n.dnu_plus) : Vector(d.d.dnu_minus - d.n.dnu_minus);
    const Vector dv = plus ? t.dn_plus : t.dn_minus;
    return Vector(t.v_s.cwiseProduct(c.d_ds(vp)) + dv.cwiseProduct(dvp));
  };
  const Vector t3_plus = h1.normal.cwiseProduct(dot_side(d2, true)) + h2.normal.cwiseProduct(dot_side(d1, true));
  const Vector t3_minus = h1.normal.cwiseProduct(dot_side(d2, false)) + h2.normal.cwiseProduct(dot_side(d1, false));
  const double t3 = -2.0 * c.integrate(s1 * t3_plus - s2 * t3_minus);

  // u_d'_2 d_n v'_1 + u_d'_1 d_n v'_2 - d_n u_n'_2 v'_1 - d_n u_n'_1 v'_2 on each side
  auto mixed_side = [&](bool plus) {
    auto tr = [&](const TransmissionSolution& s) { return plus ? s.u_plus : s.u_minus; };
    auto fl = [&](const TransmissionSolution& s) { return plus ? s.dnu_plus : s.dnu_minus; };
    const Vector v1 = tr(d1.d) - tr(d1.n);
    const Vector v2 = tr(d2.d) - tr(d2.n);
    const Vector dv1 = fl(d1.d) - fl(d1.n);
    const Vector dv2 = fl(d2.d) - fl(d2.n);
    return Vector(tr(d2.d).cwiseProduct(dv1) + tr(d1.d).cwiseProduct(dv2) - fl(d2.n).cwiseProduct(v1) -
                  fl(d1.n).cwiseProduct(v2));
  };
  const double t4 = -c.integrate(s1 * mixed_side(true) - s2 * mixed_side(false));

  const JumpData jd = second_order_jumps(b, BoundaryKind::dirichlet, d1.d, d2.d, h1, h2);
  const JumpData jn = second_order_jumps(b, BoundaryKind::neumann, d1.n, d2.n, h1, h2);
  const double t5 = 2.0 * c.integrate(t.v.cwiseProduct(jn.beta) - s1 * t.dn_plus.cwiseProduct(jd.alpha));

  return t1 + t2 + t3 + t4 + t5;
}

inline double kv_hessian(const StateBundle& b, const DeformationField& h1, const DeformationField& h2) {
  return kv_hessian(b, h1, h2, solve_state_derivatives(b, h1), solve_state_derivatives(b, h2));
}

}  // namespace kvshape

#endif  // KVSHAPE_SHAPE_CALCULUS_HPP
