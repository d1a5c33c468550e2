#ifndef KVSHAPE_POTENTIAL_HPP
#define KVSHAPE_POTENTIAL_HPP

// Nystrom discretisations of the 2D Laplace layer operators
//   S u(x)  = int Gamma(x,y) u(y) ds(y),          Gamma = ln|x-y| / (2 pi)
//   K u(x)  = int d_{n(y)} Gamma(x,y) u(y) ds(y)
//   K* u(x) = int d_{n(x)} Gamma(x,y) u(y) ds(y)
// on a single curve (self blocks) and between two disjoint curves (cross blocks).

#include "kvshape/geometry.hpp"

namespace kvshape {

enum class LayerKind { single, double_layer, double_adjoint };

/// Dense operator matrix acting on node samples of the source curve and
/// producing node samples on the target curve. Quadrature weights are folded in.
struct LayerOperator {
  std::uint64_t source_id = 0;
  std::uint64_t target_id = 0;
  LayerKind kind = LayerKind::single;
  Matrix matrix;

  Vector apply(const Vector& density) const {
    require_size(density, matrix.cols(), "layer density");
    return matrix * density;
  }
};

inline double newtonian_kernel(const Point& x, const Point& y) {
  const double r = (x - y).norm();
  if (r == 0.0) throw Error(ErrorCode::singular_evaluation, "Gamma(x, x)");
  return std::log(r) / two_pi;
}

/// d_{n(y)} Gamma(x, y) = (y - x).n_y / (2 pi |x - y|^2).
inline double normal_kernel(const Point& x, const Point& y, const Point& n_y) {
  const Point d = y - x;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw Error(ErrorCode::singular_evaluation, "d_n Gamma(x, x)");
  return d.dot(n_y) / (two_pi * r2);
}

/// Throws unless the two curves are disjoint: every node of one curve lies on
/// the same side of the other and no nodes coincide.
inline void check_disjoint(const Curve& a, const Curve& b) {
  auto same_side = [](const Curve& probe, const Curve& against) {
    const int first = against.winding_number(probe.node(0));
    for (Eigen::Index j = 0; j < probe.size(); ++j) {
      const Point p = probe.node(j);
      if (against.winding_number(p) != first || against.node_distance(p) == 0.0) return false;
    }
    return true;
  };
  if (!same_side(a, b) || !same_side(b, a)) throw Error(ErrorCode::boundaries_intersect);
}

namespace detail {

inline void fill_rows(Eigen::Index rows, unsigned workers, const std::function<void(Eigen::Index)>& row) {
  parallel_for(static_cast<std::size_t>(rows), workers, [&](std::size_t i) { row(static_cast<Eigen::Index>(i)); });
}

/// Quadrature weights R_j(t_i) of the periodic log rule
/// int_0^{2pi} ln(4 sin^2((t - s)/2)) phi(s) ds ~ sum_j R_{i-j} phi(t_j), for N = 2n.
inline Vector log_weights(Eigen::Index size) {
  const Eigen::Index n = size / 2;
  const double nd = static_cast<double>(n);
  Vector r(size);
  for (Eigen::Index j = 0; j < size; ++j) {
    const double d = pi * static_cast<double>(j) / nd;
    double acc = 0.0;
    for (Eigen::Index m = 1; m < n; ++m) acc += std::cos(static_cast<double>(m) * d) / static_cast<double>(m);
    r(j) = -(two_pi / nd) * acc - (pi / (nd * nd)) * std::cos(nd * d);
  }
  return r;
}

}  // namespace detail

/// Single layer from `source` to a distinct `target` curve.
inline LayerOperator assemble_single_layer(const Curve& source, const Curve& target, unsigned workers = 1) {
  check_disjoint(source, target);
  LayerOperator op{source.id(), target.id(), LayerKind::single, Matrix(target.size(), source.size())};
  const Vector& w = source.weights();
  detail::fill_rows(target.size(), workers, [&](Eigen::Index i) {
    const Point x = target.node(i);
    for (Eigen::Index j = 0; j < source.size(); ++j) op.matrix(i, j) = newtonian_kernel(x, source.node(j)) * w(j);
  });
  return op;
}

/// Self single layer via logarithmic splitting of the kernel.
inline LayerOperator assemble_single_layer(const Curve& curve, unsigned workers = 1) {
  const Eigen::Index n = curve.size();
  const Vector rw = detail::log_weights(n);
  const Vector& t = curve.param();
  const Vector& speed = curve.speed();
  const double inv_n = 1.0 / static_cast<double>(n);
  LayerOperator op{curve.id(), curve.id(), LayerKind::single, Matrix(n, n)};
  detail::fill_rows(n, workers, [&](Eigen::Index i) {
    const Point x = curve.node(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index k = ((i - j) % n + n) % n;
      double smooth;
      if (i == j) {
        smooth = std::log(speed(i));
      } else {
        const double s = std::sin(0.5 * (t(i) - t(j)));
        smooth = std::log((x - curve.node(j)).norm()) - 0.5 * std::log(4.0 * s * s);
      }
      op.matrix(i, j) = (rw(k) / (2.0 * two_pi) + inv_n * smooth) * speed(j);
    }
  });
  return op;
}

/// Double layer (or its adjoint) from `source` to a distinct `target` curve.
inline LayerOperator assemble_double_layer(const Curve& source, const Curve& target, bool adjoint, unsigned workers = 1) {
  check_disjoint(source, target);
  LayerOperator op{source.id(), target.id(), adjoint ? LayerKind::double_adjoint : LayerKind::double_layer,
                   Matrix(target.size(), source.size())};
  const Vector& w = source.weights();
  detail::fill_rows(target.size(), workers, [&](Eigen::Index i) {
    const Point x = target.node(i);
    const Point nx = target.normal(i);
    for (Eigen::Index j = 0; j < source.size(); ++j) {
      const Point y = source.node(j);
      // d_{n(x)} Gamma(x, y) = -(y - x).n_x / (2 pi |x - y|^2)
      const double k = adjoint ? -normal_kernel(x, y, nx) : normal_kernel(x, y, source.normal(j));
      op.matrix(i, j) = k * w(j);
    }
  });
  return op;
}

/// Self double layer (or adjoint); the kernel extends continuously to the
/// diagonal with limit kappa / (4 pi).
inline LayerOperator assemble_double_layer(const Curve& curve, bool adjoint, unsigned workers = 1) {
  const Eigen::Index n = curve.size();
  LayerOperator op{curve.id(), curve.id(), adjoint ? LayerKind::double_adjoint : LayerKind::double_layer, Matrix(n, n)};
  const Vector& w = curve.weights();
  const Vector& kappa = curve.curvature();
  detail::fill_rows(n, workers, [&](Eigen::Index i) {
    const Point x = curve.node(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      double k;
      if (i == j) {
        k = kappa(i) / (2.0 * two_pi);
      } else {
        const Point y = curve.node(j);
        k = adjoint ? -normal_kernel(x, y, curve.normal(i)) : normal_kernel(x, y, curve.normal(j));
      }
      op.matrix(i, j) = k * w(j);
    }
  });
  return op;
}

/// Evaluates int_C (u d_{n(y)}Gamma - Gamma dn) ds(y) at x: the Green
/// representation contribution of one closed curve with outward normal n.
inline double green_contribution(const Curve& curve, const Vector& u, const Vector& dn, const Point& x) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < curve.size(); ++j) {
    const Point y = curve.node(j);
    acc += (u(j) * normal_kernel(x, y, curve.normal(j)) - newtonian_kernel(x, y) * dn(j)) * curve.weights()(j);
  }
  return acc;
}

}  // namespace kvshape

#endif  // KVSHAPE_POTENTIAL_HPP
