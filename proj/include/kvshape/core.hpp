#ifndef KVSHAPE_CORE_HPP
#define KVSHAPE_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <exception>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace kvshape {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point = Eigen::Vector2d;
using PointSet = Eigen::MatrixX2d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Failure categories raised by the toolkit. The CLI maps them onto exit codes.
enum class ErrorCode {
  degenerate_shape,
  violates_margin,
  size_mismatch,
  singular_evaluation,
  boundaries_intersect,
  near_singular_evaluation,
  ill_conditioned,
  capacity_degeneracy,
  neumann_incompatible,
  not_critical,
  step_inadmissible,
  line_search_failed,
  config,
  io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::degenerate_shape: return "degenerate shape";
    case ErrorCode::violates_margin: return "violates d0 margin";
    case ErrorCode::size_mismatch: return "size mismatch";
    case ErrorCode::singular_evaluation: return "singular evaluation";
    case ErrorCode::boundaries_intersect: return "boundaries must be disjoint";
    case ErrorCode::near_singular_evaluation: return "near-singular evaluation refused";
    case ErrorCode::ill_conditioned: return "integral system ill-conditioned";
    case ErrorCode::capacity_degeneracy: return "capacity degeneracy: rescale geometry";
    case ErrorCode::neumann_incompatible: return "Neumann data incompatible";
    case ErrorCode::not_critical: return "not a critical configuration";
    case ErrorCode::step_inadmissible: return "step leaves admissible set";
    case ErrorCode::line_search_failed: return "line search failed";
    case ErrorCode::config: return "configuration error";
    case ErrorCode::io: return "I/O failure";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                          : std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::size_mismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                              " samples, expected " + std::to_string(n));
  }
}

/// Two-phase piecewise-constant conductivity: sigma1 outside the inclusion, sigma2 inside.
struct Conductivity {
  double sigma1 = 1.0;
  double sigma2 = 1.0;

  /// [sigma] = sigma1 - sigma2 (exterior minus interior).
  double jump() const { return sigma1 - sigma2; }
  double mu() const { return jump() / (sigma1 + sigma2); }
};

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// handled by exactly one call and writes only its own output slot, so results
/// do not depend on the worker count. Exceptions are rethrown in index order.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(workers, count);
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += nthreads) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace kvshape

#endif  // KVSHAPE_CORE_HPP
