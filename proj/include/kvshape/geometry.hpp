#ifndef KVSHAPE_GEOMETRY_HPP
#define KVSHAPE_GEOMETRY_HPP

// Smooth closed planar curves sampled at equispaced parameter nodes, with
// spectral derivatives and the tangential calculus specialised to curves:
// grad_tau f = (df/ds) tau, div_tau(v_tau tau + v_n n) = d(v_tau)/ds + kappa v_n,
// and Delta_tau f = d2f/ds2.

#include "kvshape/core.hpp"

#include <unsupported/Eigen/FFT>

#include <atomic>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace kvshape {

/// Derivative of order `order` of a 2pi-periodic function sampled at N
/// equispaced nodes, by trigonometric interpolation. The Nyquist mode is
/// dropped for odd orders.
inline Vector periodic_derivative(const Vector& values, int order = 1) {
  const Eigen::Index n = values.size();
  if (order == 0 || n == 0) return values;
  Eigen::FFT<double> fft;
  std::vector<double> in(values.data(), values.data() + n);
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, in);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index wave = (2 * k <= n) ? k : k - n;
    if (2 * k == n && order % 2 == 1) {
      spectrum[k] = 0.0;
      continue;
    }
    std::complex<double> factor = 1.0;
    for (int o = 0; o < order; ++o) factor *= std::complex<double>(0.0, static_cast<double>(wave));
    spectrum[k] *= factor;
  }
  std::vector<double> out;
  fft.inv(out, spectrum);
  return Eigen::Map<const Vector>(out.data(), n);
}

/// Equispaced parameter grid t_j = 2 pi j / N.
inline Vector parameter_grid(Eigen::Index n) {
  Vector t(n);
  for (Eigen::Index j = 0; j < n; ++j) t(j) = two_pi * static_cast<double>(j) / static_cast<double>(n);
  return t;
}

/// Radial trigonometric description of a star-shaped curve:
/// x(theta) = center + r(theta) (cos theta, sin theta),
/// r(theta) = r0 + sum_k a_k cos k theta + b_k sin k theta.
struct ShapeParams {
  Point center = Point::Zero();
  double r0 = 1.0;
  std::vector<double> cos_coeffs;  // a_1, a_2, ...
  std::vector<double> sin_coeffs;  // b_1, b_2, ...

  static ShapeParams circle(const Point& center, double radius) {
    ShapeParams p;
    p.center = center;
    p.r0 = radius;
    return p;
  }

  std::size_t max_mode() const { return std::max(cos_coeffs.size(), sin_coeffs.size()); }

  double radius(double theta) const {
    double r = r0;
    for (std::size_t k = 0; k < cos_coeffs.size(); ++k) r += cos_coeffs[k] * std::cos(static_cast<double>(k + 1) * theta);
    for (std::size_t k = 0; k < sin_coeffs.size(); ++k) r += sin_coeffs[k] * std::sin(static_cast<double>(k + 1) * theta);
    return r;
  }

  Point point(double theta) const { return center + radius(theta) * Point(std::cos(theta), std::sin(theta)); }

  bool operator==(const ShapeParams&) const = default;
};

/// Circular outer boundary and the d0 margin that inclusions must respect.
struct AdmissibleRegion {
  Point outer_center = Point::Zero();
  double outer_radius = 2.0;
  double d0 = 0.1;
};

namespace detail {
inline std::uint64_t next_curve_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

/// Discretised closed curve, oriented counter-clockwise, with outward normal.
///
/// All per-node arrays have N rows. `speed` is |x'(t)|, `weights` the
/// trapezoidal arclength weights (2 pi / N) |x'(t_j)|, and `curvature` is
/// positive on convex curves (so that div_tau n = kappa).
class Curve {
 public:
  /// Builds a curve from node coordinates x(t_j); derivatives are spectral.
  static Curve from_nodes(const PointSet& nodes) {
    const Eigen::Index n = nodes.rows();
    if (n < 16 || n % 2 != 0) {
      throw Error(ErrorCode::size_mismatch, "curves need an even node count >= 16, got " + std::to_string(n));
    }
    Curve c;
    c.id_ = detail::next_curve_id();
    c.param_ = parameter_grid(n);
    c.nodes_ = nodes;
    c.d1_.resize(n, 2);
    c.d2_.resize(n, 2);
    for (int dim = 0; dim < 2; ++dim) {
      const Vector coord = nodes.col(dim);
      c.d1_.col(dim) = periodic_derivative(coord, 1);
      c.d2_.col(dim) = periodic_derivative(coord, 2);
    }
    c.speed_ = c.d1_.rowwise().norm();
    if (c.speed_.minCoeff() <= 0.0) throw Error(ErrorCode::degenerate_shape, "zero parametrisation speed");
    c.tangent_.resize(n, 2);
    c.normal_.resize(n, 2);
    c.curvature_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = c.speed_(j);
      c.tangent_.row(j) = c.d1_.row(j) / s;
      c.normal_(j, 0) = c.tangent_(j, 1);
      c.normal_(j, 1) = -c.tangent_(j, 0);
      c.curvature_(j) = (c.d1_(j, 0) * c.d2_(j, 1) - c.d1_(j, 1) * c.d2_(j, 0)) / (s * s * s);
    }
    c.weights_ = (two_pi / static_cast<double>(n)) * c.speed_;
    return c;
  }

  /// Samples a radial shape; throws when r(theta) <= 0 or, if a region is
  /// given, when the curve comes within d0 of the outer boundary.
  static Curve from_shape(const ShapeParams& params, Eigen::Index n,
                          const std::optional<AdmissibleRegion>& region = std::nullopt) {
    check_shape(params, region);
    const Vector t = parameter_grid(n);
    PointSet nodes(n, 2);
    for (Eigen::Index j = 0; j < n; ++j) nodes.row(j) = params.point(t(j)).transpose();
    Curve c = from_nodes(nodes);
    c.shape_ = params;
    return c;
  }

  static Curve circle(const Point& center, double radius, Eigen::Index n) {
    return from_shape(ShapeParams::circle(center, radius), n);
  }

  /// Validates the radial-shape invariants on a dense sample.
  static void check_shape(const ShapeParams& params, const std::optional<AdmissibleRegion>& region) {
    constexpr int dense = 2048;
    for (int j = 0; j < dense; ++j) {
      const double theta = two_pi * j / dense;
      const double r = params.radius(theta);
      if (!(r > 0.0)) throw Error(ErrorCode::degenerate_shape, "radius " + std::to_string(r) + " at theta=" + std::to_string(theta));
      if (region) {
        const double margin = region->outer_radius - (params.point(theta) - region->outer_center).norm();
        if (!(margin > region->d0)) {
          throw Error(ErrorCode::violates_margin,
                      "distance " + std::to_string(margin) + " to the outer boundary at theta=" + std::to_string(theta));
        }
      }
    }
  }

  Eigen::Index size() const { return nodes_.rows(); }
  std::uint64_t id() const { return id_; }
  const Vector& param() const { return param_; }
  const PointSet& nodes() const { return nodes_; }
  Point node(Eigen::Index j) const { return nodes_.row(j).transpose(); }
  const PointSet& first_derivative() const { return d1_; }
  const PointSet& second_derivative() const { return d2_; }
  const PointSet& tangent() const { return tangent_; }
  const PointSet& normal() const { return normal_; }
  Point tangent(Eigen::Index j) const { return tangent_.row(j).transpose(); }
  Point normal(Eigen::Index j) const { return normal_.row(j).transpose(); }
  const Vector& curvature() const { return curvature_; }
  const Vector& speed() const { return speed_; }
  const Vector& weights() const { return weights_; }
  const std::optional<ShapeParams>& shape() const { return shape_; }

  double perimeter() const { return weights_.sum(); }

  /// Largest spacing between consecutive nodes.
  double mesh_width() const {
    double h = 0.0;
    for (Eigen::Index j = 0; j < size(); ++j) h = std::max(h, (node((j + 1) % size()) - node(j)).norm());
    return h;
  }

  /// Arclength derivative d f / ds.
  Vector d_ds(const Vector& f) const {
    require_size(f, size(), "boundary function");
    return periodic_derivative(f, 1).cwiseQuotient(speed_);
  }

  /// Second arclength derivative, i.e. the Laplace-Beltrami operator.
  Vector d2_ds2(const Vector& f) const { return d_ds(d_ds(f)); }

  /// Trapezoidal rule in arclength; spectrally accurate for smooth periodic f.
  double integrate(const Vector& f) const {
    require_size(f, size(), "boundary function");
    return f.dot(weights_);
  }

  /// Winding number of the closed node polygon around p (0 outside, 1 inside).
  int winding_number(const Point& p) const {
    double total = 0.0;
    for (Eigen::Index j = 0; j < size(); ++j) {
      const Point a = node(j) - p;
      const Point b = node((j + 1) % size()) - p;
      total += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    return static_cast<int>(std::lround(total / two_pi));
  }

  /// Distance from p to the nearest node.
  double node_distance(const Point& p) const { return (nodes_.rowwise() - p.transpose()).rowwise().norm().minCoeff(); }

 private:
  Curve() = default;

  std::uint64_t id_ = 0;
  Vector param_;
  PointSet nodes_, d1_, d2_, tangent_, normal_;
  Vector speed_, curvature_, weights_;
  std::optional<ShapeParams> shape_;
};

/// Deformation field given by its traces on a curve: h = h_n n + h_tau tau.
struct DeformationField {
  Vector normal;
  Vector tangential;

  static DeformationField zero(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }

  /// Splits ambient vector samples into normal and tangential components.
  static DeformationField from_ambient(const Curve& curve, const PointSet& field) {
    if (field.rows() != curve.size()) throw Error(ErrorCode::size_mismatch, "ambient field");
    DeformationField h;
    h.normal = (field.array() * curve.normal().array()).rowwise().sum();
    h.tangential = (field.array() * curve.tangent().array()).rowwise().sum();
    return h;
  }

  /// Ambient reconstruction h_n n + h_tau tau at every node.
  PointSet ambient(const Curve& curve) const {
    check(curve);
    PointSet out(curve.size(), 2);
    for (int d = 0; d < 2; ++d) {
      out.col(d) = normal.cwiseProduct(curve.normal().col(d)) + tangential.cwiseProduct(curve.tangent().col(d));
    }
    return out;
  }

  void check(const Curve& curve) const {
    require_size(normal, curve.size(), "h_n");
    require_size(tangential, curve.size(), "h_tau");
  }

  DeformationField operator+(const DeformationField& o) const { return {normal + o.normal, tangential + o.tangential}; }
  DeformationField operator-(const DeformationField& o) const { return {normal - o.normal, tangential - o.tangential}; }
  DeformationField operator*(double s) const { return {s * normal, s * tangential}; }
};

/// Nodes of the transported curve (I + t h)(curve).
inline PointSet transported_nodes(const Curve& curve, const DeformationField& h, double t) {
  return curve.nodes() + t * h.ambient(curve);
}

/// grad_tau f, returned as its component along tau.
inline Vector tangential_gradient(const Curve& curve, const Vector& f) { return curve.d_ds(f); }

/// div_tau of a field given by tangential and normal components.
inline Vector tangential_divergence(const Curve& curve, const Vector& v_tau, const Vector& v_n) {
  require_size(v_n, curve.size(), "v_n");
  return curve.d_ds(v_tau) + curve.curvature().cwiseProduct(v_n);
}

/// div_tau of a field given by ambient vector samples.
inline Vector tangential_divergence(const Curve& curve, const PointSet& field) {
  const DeformationField parts = DeformationField::from_ambient(curve, field);
  return tangential_divergence(curve, parts.tangential, parts.normal);
}

inline Vector laplace_beltrami(const Curve& curve, const Vector& f) { return curve.d2_ds2(f); }

inline double boundary_integral(const Curve& curve, const Vector& f) { return curve.integrate(f); }

/// Material and shape derivatives of the unit normal along h, as ambient
/// vectors: n_dot = (-(h_n)_s + kappa h_tau) tau and n' = -(h_n)_s tau.
struct NormalDerivatives {
  PointSet material;
  PointSet shape;
};

inline NormalDerivatives normal_derivatives(const Curve& curve, const DeformationField& h) {
  h.check(curve);
  const Vector dhn = curve.d_ds(h.normal);
  const Vector mat = -dhn + curve.curvature().cwiseProduct(h.tangential);
  NormalDerivatives out{PointSet(curve.size(), 2), PointSet(curve.size(), 2)};
  for (int d = 0; d < 2; ++d) {
    out.material.col(d) = mat.cwiseProduct(curve.tangent().col(d));
    out.shape.col(d) = (-dhn).cwiseProduct(curve.tangent().col(d));
  }
  return out;
}

}  // namespace kvshape

#endif  // KVSHAPE_GEOMETRY_HPP
