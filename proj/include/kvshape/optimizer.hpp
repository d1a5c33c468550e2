#ifndef KVSHAPE_OPTIMIZER_HPP
#define KVSHAPE_OPTIMIZER_HPP

// Minimisation of J over a finite radial basis
//   h = rho(theta) e_r,  rho in {1, cos k theta, sin k theta : k <= K},
// plus optional unit translations, by gradient descent or by a regularised
// Newton iteration (Levenberg-Marquardt, optionally with a frozen Hessian).

#include "kvshape/shape_calculus.hpp"

#include <chrono>

namespace kvshape {

struct BasisSpec {
  int max_mode = 4;
  bool translations = true;

  std::size_t size() const { return 1 + 2 * static_cast<std::size_t>(max_mode) + (translations ? 2 : 0); }

  std::string label(std::size_t i) const {
    if (i == 0) return "r0";
    const std::size_t radial = 1 + 2 * static_cast<std::size_t>(max_mode);
    if (i < radial) return std::string((i % 2 == 1) ? "cos" : "sin") + std::to_string((i + 1) / 2);
    return i == radial ? "tx" : "ty";
  }
};

/// Basis fields on a radial curve, split into normal and tangential parts.
/// Parameter t_j is the polar angle about the shape center.
inline std::vector<DeformationField> basis_fields(const Curve& curve, const BasisSpec& basis) {
  if (basis.max_mode < 0) throw Error(ErrorCode::config, "max_mode must be >= 0");
  const Eigen::Index n = curve.size();
  const Vector& t = curve.param();
  PointSet er(n, 2);
  er.col(0) = t.array().cos();
  er.col(1) = t.array().sin();
  std::vector<DeformationField> out;
  out.reserve(basis.size());
  auto radial = [&](const Vector& rho) {
    PointSet field(n, 2);
    field.col(0) = rho.cwiseProduct(er.col(0));
    field.col(1) = rho.cwiseProduct(er.col(1));
    out.push_back(DeformationField::from_ambient(curve, field));
  };
  radial(Vector::Ones(n));
  for (int k = 1; k <= basis.max_mode; ++k) {
    radial((static_cast<double>(k) * t).array().cos().matrix());
    radial((static_cast<double>(k) * t).array().sin().matrix());
  }
  if (basis.translations) {
    for (int d = 0; d < 2; ++d) {
      PointSet field = PointSet::Zero(n, 2);
      field.col(d).setOnes();
      out.push_back(DeformationField::from_ambient(curve, field));
    }
  }
  return out;
}

struct GradientHessian {
  Vector gradient;
  Matrix hessian;
};

/// g_i = DJ(h_i) and, if requested, H_ij = D^2 J(h_i, h_j). Derivative solves
/// and pair evaluations run on `workers` threads; every entry is computed by
/// the same sequential code, so the output does not depend on the thread count.
inline GradientHessian assemble_gradient_and_hessian(const StateBundle& bundle, const std::vector<DeformationField>& fields,
                                                     bool with_hessian = true, unsigned workers = 1) {
  const std::size_t m = fields.size();
  GradientHessian out{Vector(static_cast<Eigen::Index>(m)), Matrix()};
  for (std::size_t i = 0; i < m; ++i) out.gradient(static_cast<Eigen::Index>(i)) = kv_gradient(bundle, fields[i]);
  if (!with_hessian) return out;
  std::vector<DerivativeBundle> der(m);
  parallel_for(m, workers, [&](std::size_t i) { der[i] = solve_state_derivatives(bundle, fields[i]); });
  out.hessian.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  parallel_for(m * m, workers, [&](std::size_t k) {
    const std::size_t i = k / m;
    const std::size_t j = k % m;
    out.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        kv_hessian(bundle, fields[i], fields[j], der[i], der[j]);
  });
  return out;
}

inline GradientHessian assemble_gradient_and_hessian(const StateBundle& bundle, const BasisSpec& basis,
                                                     bool with_hessian = true, unsigned workers = 1) {
  return assemble_gradient_and_hessian(bundle, basis_fields(bundle.inner(), basis), with_hessian, workers);
}

/// params + t * direction in basis coordinates. Throws step_inadmissible when
/// the result violates positivity or the margin to the outer boundary.
inline ShapeParams update_shape(const ShapeParams& params, const BasisSpec& basis, const Vector& direction, double t,
                                const std::optional<AdmissibleRegion>& region = std::nullopt) {
  require_size(direction, static_cast<Eigen::Index>(basis.size()), "direction");
  ShapeParams out = params;
  const auto modes = static_cast<std::size_t>(basis.max_mode);
  if (out.cos_coeffs.size() < modes) out.cos_coeffs.resize(modes, 0.0);
  if (out.sin_coeffs.size() < modes) out.sin_coeffs.resize(modes, 0.0);
  out.r0 += t * direction(0);
  for (std::size_t k = 0; k < modes; ++k) {
    out.cos_coeffs[k] += t * direction(static_cast<Eigen::Index>(1 + 2 * k));
    out.sin_coeffs[k] += t * direction(static_cast<Eigen::Index>(2 + 2 * k));
  }
  if (basis.translations) {
    out.center.x() += t * direction(static_cast<Eigen::Index>(1 + 2 * modes));
    out.center.y() += t * direction(static_cast<Eigen::Index>(2 + 2 * modes));
  }
  try {
    Curve::check_shape(out, region);
  } catch (const Error& e) {
    throw Error(ErrorCode::step_inadmissible, e.what());
  }
  return out;
}

enum class OptimizerMode { descent, lm, frozen };

struct OptimizerOptions {
  OptimizerMode mode = OptimizerMode::lm;
  BasisSpec basis;
  int max_iter = 50;
  double tol_grad = 1e-10;
  double tol_J = 1e-14;
  double armijo_c = 1e-4;
  double step0 = 1.0;
  double min_step = 1e-10;
  double mu0 = 1e-3;
  int freeze_period = 5;
  int max_rejections = 12;
  unsigned workers = 1;
};

struct Iterate {
  int iter = 0;
  ShapeParams params;
  double J = 0.0;
  Vector gradient;
  double grad_norm = 0.0;
  double step = 0.0;
  double mu = 0.0;
  double seconds = 0.0;
};

struct RunHistory {
  std::vector<Iterate> iterates;
  std::string status;

  const Iterate& last() const { return iterates.back(); }
};

/// Raised when no admissible Armijo step exists; carries the history so far.
class LineSearchFailed : public Error {
 public:
  explicit LineSearchFailed(RunHistory h) : Error(ErrorCode::line_search_failed), history(std::move(h)) {}
  RunHistory history;
};

/// Problem definition shared by every iterate.
struct InverseProblem {
  Curve outer;
  Conductivity sigma;
  AdmissibleRegion region;
  Vector f, g;
  Eigen::Index n_inner = 128;
};

inline StateBundle make_bundle(const InverseProblem& p, const ShapeParams& shape) {
  return StateBundle(Geometry{p.outer, Curve::from_shape(shape, p.n_inner, p.region)}, p.sigma, p.f, p.g);
}

/// Levenberg-Marquardt direction -(H + mu I)^{-1} g.
inline Vector lm_direction(const Matrix& hessian, const Vector& gradient, double mu) {
  const Matrix sym = 0.5 * (hessian + hessian.transpose());
  const Matrix reg = sym + mu * Matrix::Identity(sym.rows(), sym.cols());
  return -reg.ldlt().solve(gradient);
}

inline RunHistory reconstruct(const InverseProblem& problem, const ShapeParams& initial, const OptimizerOptions& opt) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  RunHistory hist;
  ShapeParams params = initial;
  if (params.cos_coeffs.size() < static_cast<std::size_t>(opt.basis.max_mode)) params.cos_coeffs.resize(opt.basis.max_mode, 0.0);
  if (params.sin_coeffs.size() < static_cast<std::size_t>(opt.basis.max_mode)) params.sin_coeffs.resize(opt.basis.max_mode, 0.0);

  StateBundle bundle = make_bundle(problem, params);
  double J = kv_value(bundle);
  double mu = opt.mu0;
  double step_guess = opt.step0;
  Matrix frozen;
  int frozen_age = 0;
  double last_step = 0.0;

  for (int iter = 0;; ++iter) {
    const bool needs_hessian = opt.mode == OptimizerMode::lm || (opt.mode == OptimizerMode::frozen &&
                                                                 (frozen.size() == 0 || frozen_age >= opt.freeze_period));
    GradientHessian gh = assemble_gradient_and_hessian(bundle, basis_fields(bundle.inner(), opt.basis), needs_hessian,
                                                       opt.workers);
    if (needs_hessian) {
      frozen = gh.hessian;
      frozen_age = 0;
    }
    Iterate it;
    it.iter = iter;
    it.params = params;
    it.J = J;
    it.gradient = gh.gradient;
    it.grad_norm = gh.gradient.cwiseAbs().maxCoeff();
    it.step = last_step;
    it.mu = mu;
    it.seconds = elapsed();
    hist.iterates.push_back(it);

    if (J <= opt.tol_J) {
      hist.status = "converged: J below tolerance";
      return hist;
    }
    if (it.grad_norm <= opt.tol_grad) {
      hist.status = "converged: gradient below tolerance";
      return hist;
    }
    if (iter >= opt.max_iter) {
      hist.status = "stopped: max_iter reached";
      return hist;
    }

    const Vector& g = gh.gradient;
    std::optional<ShapeParams> accepted;
    double accepted_J = 0.0;
    double accepted_t = 0.0;

    auto try_step = [&](const Vector& d, double t) -> bool {
      ShapeParams trial;
      try {
        trial = update_shape(params, opt.basis, d, t, problem.region);
      } catch (const Error&) {
        return false;
      }
      double Jt;
      try {
        Jt = kv_value(make_bundle(problem, trial));
      } catch (const Error&) {
        return false;
      }
      if (Jt <= J + opt.armijo_c * t * g.dot(d)) {
        accepted = trial;
        accepted_J = Jt;
        accepted_t = t;
        return true;
      }
      return false;
    };

    if (opt.mode != OptimizerMode::descent) {
      for (int r = 0; r < opt.max_rejections && !accepted; ++r) {
        const Vector d = lm_direction(frozen, g, mu);
        if (g.dot(d) < 0.0 && try_step(d, 1.0)) {
          mu *= 0.5;
          break;
        }
        mu *= 4.0;
      }
    }
    if (!accepted) {
      const Vector d = -g;
      for (double t = step_guess; t >= opt.min_step; t *= 0.5) {
        if (try_step(d, t)) break;
      }
      if (accepted) step_guess = std::min(2.0 * accepted_t, 1e6);
    }
    if (!accepted) {
      hist.status = "line search failed";
      throw LineSearchFailed(std::move(hist));
    }
    params = *accepted;
    J = accepted_J;
    bundle = make_bundle(problem, params);
    ++frozen_age;
    last_step = accepted_t;
  }
}

}  // namespace kvshape

#endif  // KVSHAPE_OPTIMIZER_HPP
