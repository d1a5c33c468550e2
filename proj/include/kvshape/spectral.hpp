#ifndef KVSHAPE_SPECTRAL_HPP
#define KVSHAPE_SPECTRAL_HPP

// Shape Hessian at the global minimiser (u_d = u_n) and its eigenvalue decay.
//
// At the minimiser v = u_d - u_n vanishes, so v' = u_d' - u_n' carries no
// interface jumps and its outer trace is -u_n'. It is obtained by one plain
// Dirichlet solve from that trace, which keeps the tiny high-mode entries free
// of cancellation between two O(1) derivative solves.

#include "kvshape/shape_calculus.hpp"

#include <Eigen/Eigenvalues>

namespace kvshape {

/// Normal fields h_n in {cos k t, sin k t : k = 1..modes}, scaled to unit
/// L2 norm on the curve, ordered cos1, sin1, cos2, ...
inline std::vector<DeformationField> fourier_normal_fields(const Curve& curve, int modes) {
  std::vector<DeformationField> out;
  const Vector& t = curve.param();
  for (int k = 1; k <= modes; ++k) {
    for (int s = 0; s < 2; ++s) {
      Vector hn = s == 0 ? Vector((k * t).array().cos()) : Vector((k * t).array().sin());
      hn /= std::sqrt(curve.integrate(hn.cwiseProduct(hn)));
      out.push_back({hn, Vector::Zero(curve.size())});
    }
  }
  return out;
}

/// Relative trace mismatch max|u_d - u_n| / max|u_d| on both boundaries.
inline double critical_mismatch(const StateBundle& b) {
  const double scale = std::max(b.u_d().u_plus.cwiseAbs().maxCoeff(), b.u_d().u_outer.cwiseAbs().maxCoeff());
  const double diff = std::max((b.u_d().u_plus - b.u_n().u_plus).cwiseAbs().maxCoeff(),
                               (b.u_d().u_outer - b.u_n().u_outer).cwiseAbs().maxCoeff());
  return diff / std::max(scale, 1e-300);
}

/// v'(h) at a critical configuration.
inline TransmissionSolution critical_difference_derivative(const StateBundle& b, const DeformationField& h) {
  const TransmissionSolution un = solve_state_derivative(BoundaryKind::neumann, b, h);
  return b.solver().solve_dirichlet(JumpData::zero(b.inner().size()), -un.u_outer);
}

/// M_ij = 2[sigma] ( <v'_j, d/ds(h_{i,n} du/ds)> - (sigma1/sigma2) <d_n u+ h_{i,n}, d_n v'_j+> ).
/// Requires u_d = u_n; throws not_critical otherwise.
inline Matrix hessian_at_critical(const StateBundle& b, const std::vector<DeformationField>& fields, unsigned workers = 1,
                                  double tolerance = 1e-8) {
  const double mismatch = critical_mismatch(b);
  if (mismatch > tolerance) throw Error(ErrorCode::not_critical, "relative trace mismatch " + std::to_string(mismatch));
  const Curve& c = b.inner();
  const std::size_t m = fields.size();
  const double r = b.sigma().sigma1 / b.sigma().sigma2;
  const TransmissionSolution& u = b.u_d();
  const Vector& us = b.state_ds(BoundaryKind::dirichlet);

  std::vector<TransmissionSolution> vp(m);
  std::vector<Vector> t1(m), m2(m);
  parallel_for(m, workers, [&](std::size_t i) {
    fields[i].check(c);
    vp[i] = critical_difference_derivative(b, fields[i]);
    t1[i] = c.d_ds(fields[i].normal.cwiseProduct(us));
    m2[i] = r * u.dnu_plus.cwiseProduct(fields[i].normal);
  });
  Matrix M(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double value = c.integrate(vp[j].u_plus.cwiseProduct(t1[i])) - c.integrate(m2[i].cwiseProduct(vp[j].dnu_plus));
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * b.jump() * value;
    }
  }
  return M;
}

/// int_Omega sigma |grad v'|^2 reduced to -sigma1 int_{d Omega} u_n' d_n u_d' ds.
inline double critical_energy(const StateBundle& b, const DeformationField& h) {
  const DerivativeBundle d = solve_state_derivatives(b, h);
  return -b.sigma().sigma1 * b.outer().integrate(d.n.u_outer.cwiseProduct(d.d.dnu_outer));
}

struct SpectrumReport {
  std::vector<std::string> basis;
  Vector eigenvalues;  // descending
  double decay_slope = 0.0;
  double decay_intercept = 0.0;
  double min_eigenvalue = 0.0;
  bool positive = true;
};

/// Least-squares fit of log(lambda_k) = intercept + slope * k over positive
/// eigenvalues, k = 1, 2, ...
inline std::pair<double, double> log_linear_fit(const Vector& values) {
  std::vector<double> xs, ys;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) > 0.0) {
      xs.push_back(static_cast<double>(k + 1));
      ys.push_back(std::log(values(k)));
    }
  }
  if (xs.size() < 2) return {0.0, ys.empty() ? 0.0 : ys.front()};
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

inline SpectrumReport spectrum_report(const Matrix& matrix, std::vector<std::string> basis = {}) {
  if (matrix.rows() != matrix.cols()) throw Error(ErrorCode::size_mismatch, "spectrum of a non-square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (matrix + matrix.transpose()), Eigen::EigenvaluesOnly);
  SpectrumReport rep;
  rep.basis = std::move(basis);
  rep.eigenvalues = es.eigenvalues().reverse();
  std::tie(rep.decay_slope, rep.decay_intercept) = log_linear_fit(rep.eigenvalues);
  if (rep.eigenvalues.size() > 0) {
    rep.min_eigenvalue = rep.eigenvalues.minCoeff();
    rep.positive = rep.min_eigenvalue >= -1e-10 * std::abs(rep.eigenvalues.maxCoeff());
  }
  return rep;
}

}  // namespace kvshape

#endif  // KVSHAPE_SPECTRAL_HPP
