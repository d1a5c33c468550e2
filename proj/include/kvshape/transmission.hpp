#ifndef KVSHAPE_TRANSMISSION_HPP
#define KVSHAPE_TRANSMISSION_HPP

// Transmission problems in the annulus Omega \ omega and the inclusion omega:
//   div(sigma grad v) = 0,  [v] = alpha,  [sigma d_n v] = beta on d omega,
// with Dirichlet (v = f1) or Neumann (d_n v = g1) data on d Omega. Jumps are
// exterior minus interior, so [sigma] = sigma1 - sigma2.
//
// Both cases are reduced to a 2x2 block Nystrom system in the unknown v+ on
// d omega and the missing outer trace. The interior flux follows from the
// inclusion's own representation formula: S (d_n v-) = (K - 1/2)(v+ - alpha).

#include "kvshape/potential.hpp"

#include <memory>

namespace kvshape {

struct Geometry {
  Curve outer;  // d Omega
  Curve inner;  // d omega
};

struct JumpData {
  Vector alpha;  // [v] on d omega
  Vector beta;   // [sigma d_n v] on d omega

  static JumpData zero(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
};

enum class BoundaryKind { dirichlet, neumann };

/// All traces of a solved transmission problem.
struct TransmissionSolution {
  Vector u_plus, u_minus, dnu_plus, dnu_minus;  // on d omega
  Vector u_outer, dnu_outer;                    // on d Omega
  BoundaryKind bc_kind = BoundaryKind::dirichlet;

  TransmissionSolution operator-(const TransmissionSolution& o) const {
    return {u_plus - o.u_plus,   u_minus - o.u_minus,     dnu_plus - o.dnu_plus,
            dnu_minus - o.dnu_minus, u_outer - o.u_outer, dnu_outer - o.dnu_outer, bc_kind};
  }
};

enum class Region { annulus, inclusion };

/// Green representation of a solution at points strictly inside `region`.
/// Points within one mesh width of either boundary are refused.
inline Vector harmonic_eval(const Geometry& geom, Region region, const TransmissionSolution& sol, const PointSet& points) {
  Vector out(points.rows());
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    const Point x = points.row(k).transpose();
    const bool in_outer = geom.outer.winding_number(x) == 1;
    const bool in_inner = geom.inner.winding_number(x) == 1;
    const bool ok_region = region == Region::annulus ? (in_outer && !in_inner) : in_inner;
    if (!ok_region) throw Error(ErrorCode::near_singular_evaluation, "point outside the requested region");
    if (geom.outer.node_distance(x) <= geom.outer.mesh_width() || geom.inner.node_distance(x) <= geom.inner.mesh_width()) {
      throw Error(ErrorCode::near_singular_evaluation, "point within one mesh width of a boundary");
    }
    if (region == Region::annulus) {
      out(k) = green_contribution(geom.outer, sol.u_outer, sol.dnu_outer, x) -
               green_contribution(geom.inner, sol.u_plus, sol.dnu_plus, x);
    } else {
      out(k) = green_contribution(geom.inner, sol.u_minus, sol.dnu_minus, x);
    }
  }
  return out;
}

/// Assembles and factors every operator needed for repeated solves on one
/// geometry. Immutable after construction; solves are safe to run concurrently.
class TransmissionSolver {
 public:
  static constexpr double max_condition = 1e12;
  static constexpr double max_capacity_condition = 1e9;

  TransmissionSolver(Geometry geom, Conductivity sigma, unsigned workers = 1)
      : geom_(std::move(geom)), sigma_(sigma) {
    if (!(sigma_.sigma1 > 0.0) || !(sigma_.sigma2 > 0.0)) {
      throw Error(ErrorCode::config, "conductivities must be positive");
    }
    const Curve& out = geom_.outer;
    const Curve& in = geom_.inner;
    check_disjoint(out, in);
    for (Eigen::Index j = 0; j < in.size(); ++j) {
      if (out.winding_number(in.node(j)) != 1) throw Error(ErrorCode::boundaries_intersect, "inclusion not inside the domain");
    }
    S_w_ = assemble_single_layer(in, workers).matrix;
    K_w_ = assemble_double_layer(in, false, workers).matrix;
    S_O_ = assemble_single_layer(out, workers).matrix;
    K_O_ = assemble_double_layer(out, false, workers).matrix;
    S_wO_ = assemble_single_layer(out, in, workers).matrix;
    K_wO_ = assemble_double_layer(out, in, false, workers).matrix;
    S_Ow_ = assemble_single_layer(in, out, workers).matrix;
    K_Ow_ = assemble_double_layer(in, out, false, workers).matrix;

    const Eigen::Index ni = in.size();
    const Eigen::Index no = out.size();
    const double s1 = sigma_.sigma1;
    const double c = s1 / (s1 + sigma_.sigma2);
    const Matrix Ii = Matrix::Identity(ni, ni);
    const Matrix Io = Matrix::Identity(no, no);

    // rows: [d omega; d Omega], columns: [v+ ; outer unknown]
    Matrix dir(ni + no, ni + no);
    dir.topLeftCorner(ni, ni) = 0.5 * Ii + sigma_.mu() * K_w_;
    dir.topRightCorner(ni, no) = c * S_wO_;
    dir.bottomLeftCorner(no, ni) = (sigma_.jump() / s1) * K_Ow_;
    dir.bottomRightCorner(no, no) = S_O_;
    dir_lu_ = factor(dir, ErrorCode::ill_conditioned, max_condition);

    Matrix neu = Matrix::Zero(ni + no + 1, ni + no + 1);
    neu.topLeftCorner(ni, ni) = dir.topLeftCorner(ni, ni);
    neu.block(0, ni, ni, no) = -c * K_wO_;
    neu.block(ni, 0, no, ni) = dir.bottomLeftCorner(no, ni);
    neu.block(ni, ni, no, no) = 0.5 * Io - K_O_;
    neu.block(ni, ni + no, no, 1).setOnes();
    neu.block(ni + no, ni, 1, no) = out.weights().transpose() / out.perimeter();
    neu_lu_ = factor(neu, ErrorCode::ill_conditioned, max_condition);

    S_w_lu_ = factor(S_w_, ErrorCode::capacity_degeneracy, max_capacity_condition);
    Kw_half_ = K_w_ - 0.5 * Ii;
  }

  const Geometry& geometry() const { return geom_; }
  const Conductivity& conductivity() const { return sigma_; }

  TransmissionSolution solve_dirichlet(const JumpData& jumps, const Vector& f1) const {
    check_jumps(jumps);
    require_size(f1, geom_.outer.size(), "f1");
    const auto [rhs_w, rhs_O] = jump_rhs(jumps);
    const Eigen::Index ni = geom_.inner.size();
    const Eigen::Index no = geom_.outer.size();
    const double c = sigma_.sigma1 / (sigma_.sigma1 + sigma_.sigma2);
    Vector rhs(ni + no);
    rhs.head(ni) = c * (K_wO_ * f1 + rhs_w);
    rhs.tail(no) = K_O_ * f1 - 0.5 * f1 + rhs_O;
    const Vector x = dir_lu_.solve(rhs);
    TransmissionSolution sol;
    sol.bc_kind = BoundaryKind::dirichlet;
    sol.u_outer = f1;
    sol.dnu_outer = x.tail(no);
    finish(sol, x.head(ni), jumps);
    return sol;
  }

  /// Neumann solve with the gauge (1/|d Omega|) int v = gauge_mean / |d Omega|.
  /// `constraint_scale` multiplies the gauge row; the solution does not depend on it.
  TransmissionSolution solve_neumann(const JumpData& jumps, const Vector& g1, double gauge_mean,
                                     double constraint_scale = 1.0) const {
    check_jumps(jumps);
    require_size(g1, geom_.outer.size(), "g1");
    const double flux_out = sigma_.sigma1 * geom_.outer.integrate(g1);
    const double flux_in = geom_.inner.integrate(jumps.beta);
    const double scale = 1.0 + sigma_.sigma1 * geom_.outer.integrate(g1.cwiseAbs()) + geom_.inner.integrate(jumps.beta.cwiseAbs());
    if (std::abs(flux_out - flux_in) > 1e-10 * scale) {
      throw Error(ErrorCode::neumann_incompatible, "sigma1 int g1 = " + std::to_string(flux_out) +
                                                       ", int beta = " + std::to_string(flux_in));
    }
    const auto [rhs_w, rhs_O] = jump_rhs(jumps);
    const Eigen::Index ni = geom_.inner.size();
    const Eigen::Index no = geom_.outer.size();
    const double c = sigma_.sigma1 / (sigma_.sigma1 + sigma_.sigma2);
    Vector rhs(ni + no + 1);
    rhs.head(ni) = c * (-(S_wO_ * g1) + rhs_w);
    rhs.segment(ni, no) = -(S_O_ * g1) + rhs_O;
    rhs(ni + no) = gauge_mean / geom_.outer.perimeter();
    Vector x;
    if (constraint_scale == 1.0) {
      x = neu_lu_.solve(rhs);
    } else {
      Matrix scaled = neu_lu_.reconstructedMatrix();
      scaled.row(ni + no) *= constraint_scale;
      rhs(ni + no) *= constraint_scale;
      x = Eigen::PartialPivLU<Matrix>(scaled).solve(rhs);
    }
    TransmissionSolution sol;
    sol.bc_kind = BoundaryKind::neumann;
    sol.u_outer = x.segment(ni, no);
    sol.dnu_outer = g1;
    finish(sol, x.head(ni), jumps);
    return sol;
  }

 private:
  static Eigen::PartialPivLU<Matrix> factor(const Matrix& m, ErrorCode code, double limit) {
    Eigen::PartialPivLU<Matrix> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1.0 / limit)) {
      throw Error(code, "estimated condition number " + std::to_string(1.0 / rc));
    }
    return lu;
  }

  void check_jumps(const JumpData& j) const {
    require_size(j.alpha, geom_.inner.size(), "alpha");
    require_size(j.beta, geom_.inner.size(), "beta");
  }

  // Jump contributions to the right-hand sides of the d omega and d Omega rows
  // (the d omega row is still to be multiplied by sigma1 / (sigma1 + sigma2)).
  std::pair<Vector, Vector> jump_rhs(const JumpData& j) const {
    const double s1 = sigma_.sigma1;
    const double r = sigma_.sigma2 / s1;
    Vector w = -r * (Kw_half_ * j.alpha) + (S_w_ * j.beta) / s1;
    Vector o = -r * (K_Ow_ * j.alpha) + (S_Ow_ * j.beta) / s1;
    return {std::move(w), std::move(o)};
  }

  void finish(TransmissionSolution& sol, const Vector& v_plus, const JumpData& j) const {
    sol.u_plus = v_plus;
    sol.u_minus = v_plus - j.alpha;
    sol.dnu_minus = S_w_lu_.solve(Kw_half_ * sol.u_minus);
    sol.dnu_plus = (j.beta + sigma_.sigma2 * sol.dnu_minus) / sigma_.sigma1;
  }

  Geometry geom_;
  Conductivity sigma_;
  Matrix S_w_, K_w_, S_O_, K_O_, S_wO_, K_wO_, S_Ow_, K_Ow_, Kw_half_;
  Eigen::PartialPivLU<Matrix> dir_lu_, neu_lu_, S_w_lu_;
};

inline TransmissionSolution solve_dirichlet(const Geometry& geom, Conductivity sigma, const JumpData& jumps,
                                            const Vector& f1) {
  return TransmissionSolver(geom, sigma).solve_dirichlet(jumps, f1);
}

inline TransmissionSolution solve_neumann(const Geometry& geom, Conductivity sigma, const JumpData& jumps,
                                          const Vector& g1, double gauge_mean) {
  return TransmissionSolver(geom, sigma).solve_neumann(jumps, g1, gauge_mean);
}

struct StatePair {
  TransmissionSolution u_d;
  TransmissionSolution u_n;
};

/// Dirichlet state with u = f and Neumann state with sigma1 d_n u = g,
/// gauged by int u_n = int f on d Omega.
inline StatePair solve_states(const TransmissionSolver& solver, const Vector& f, const Vector& g) {
  const Curve& out = solver.geometry().outer;
  const Eigen::Index ni = solver.geometry().inner.size();
  const JumpData none = JumpData::zero(ni);
  return {solver.solve_dirichlet(none, f),
          solver.solve_neumann(none, g / solver.conductivity().sigma1, out.integrate(f))};
}

inline StatePair solve_states(const Geometry& geom, Conductivity sigma, const Vector& f, const Vector& g) {
  return solve_states(TransmissionSolver(geom, sigma), f, g);
}

}  // namespace kvshape

#endif  // KVSHAPE_TRANSMISSION_HPP
