#ifndef KVSHAPE_CLI_IO_HPP
#define KVSHAPE_CLI_IO_HPP

// Run configuration, measurement files, the verification battery and report
// emission. Configuration files are JSON; configs/schema.json documents them.

#include "kvshape/verification.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kvshape {

inline constexpr const char* toolkit_version = "0.1.0";

using json = nlohmann::json;

struct DataSpec {
  double constant = 0.0;
  std::vector<double> cos_coeffs{1.0};
  std::vector<double> sin_coeffs;
  std::string measurements;  // optional CSV path; synthesised from the target when empty
};

struct RunConfig {
  double outer_radius = 2.0;
  double sigma1 = 1.0;
  double sigma2 = 5.0;
  double d0 = 0.1;
  int n_outer = 128;
  int n_inner = 128;
  ShapeParams target;
  ShapeParams initial;
  ShapeParams probe;
  DataSpec data;
  OptimizerOptions optimizer;
  int spectrum_modes = 8;
  std::vector<double> taylor_steps = default_taylor_steps();
  std::string out_dir;
  bool emit_svg = true;
  json source;  // parsed input, echoed into reports

  Conductivity conductivity() const { return {sigma1, sigma2}; }
  AdmissibleRegion region() const { return {Point::Zero(), outer_radius, d0}; }
  Curve outer_curve() const { return Curve::circle(Point::Zero(), outer_radius, n_outer); }
  Curve inner_curve(const ShapeParams& s) const { return Curve::from_shape(s, n_inner, region()); }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::config, path + ": " + what);
}

inline void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

inline const json* child(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline double number(const json& parent, const std::string& prefix, const std::string& key, double fallback) {
  const json* v = child(parent, key);
  if (!v) return fallback;
  if (!v->is_number()) config_error(prefix + key, "expected a number");
  return v->get<double>();
}

inline int integer(const json& parent, const std::string& prefix, const std::string& key, int fallback) {
  const json* v = child(parent, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) config_error(prefix + key, "expected an integer");
  return v->get<int>();
}

inline bool boolean(const json& parent, const std::string& prefix, const std::string& key, bool fallback) {
  const json* v = child(parent, key);
  if (!v) return fallback;
  if (!v->is_boolean()) config_error(prefix + key, "expected true or false");
  return v->get<bool>();
}

inline std::string text(const json& parent, const std::string& prefix, const std::string& key, std::string fallback) {
  const json* v = child(parent, key);
  if (!v) return fallback;
  if (!v->is_string()) config_error(prefix + key, "expected a string");
  return v->get<std::string>();
}

inline std::vector<double> numbers(const json& parent, const std::string& prefix, const std::string& key,
                                   std::vector<double> fallback) {
  const json* v = child(parent, key);
  if (!v) return fallback;
  if (!v->is_array()) config_error(prefix + key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) config_error(prefix + key + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

inline const json& section(const json& root, const std::string& key) {
  static const json empty = json::object();
  const json* v = child(root, key);
  if (!v) return empty;
  if (!v->is_object()) config_error(key, "expected an object");
  return *v;
}

inline ShapeParams shape(const json& s, const std::string& path, const ShapeParams& fallback) {
  ShapeParams p = fallback;
  const std::string pre = path + ".";
  only_keys(s, path, {"center", "r0", "cos", "sin"});
  if (const json* c = child(s, "center")) {
    if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number()) {
      config_error(pre + "center", "expected [x, y]");
    }
    p.center = Point((*c)[0].get<double>(), (*c)[1].get<double>());
  }
  p.r0 = number(s, pre, "r0", p.r0);
  p.cos_coeffs = numbers(s, pre, "cos", p.cos_coeffs);
  p.sin_coeffs = numbers(s, pre, "sin", p.sin_coeffs);
  return p;
}

inline void check_admissible(const ShapeParams& p, const AdmissibleRegion& region, const std::string& path) {
  try {
    Curve::check_shape(p, region);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
}

}  // namespace detail

inline std::string to_string(OptimizerMode m) {
  switch (m) {
    case OptimizerMode::descent: return "descent";
    case OptimizerMode::lm: return "lm";
    case OptimizerMode::frozen: return "frozen";
  }
  return "lm";
}

/// Validated configuration from a parsed JSON document.
inline RunConfig config_from_json(const json& root) {
  using namespace detail;
  if (!root.is_object()) config_error("<root>", "expected an object");
  RunConfig c;
  c.source = root;
  only_keys(root, "", {"domain", "discretization", "target_shape", "initial_shape", "probe_shape", "data", "optimizer",
                       "spectrum", "verify", "output"});

  const json& dom = section(root, "domain");
  only_keys(dom, "domain", {"outer_radius", "sigma1", "sigma2", "d0"});
  c.outer_radius = number(dom, "domain.", "outer_radius", c.outer_radius);
  c.sigma1 = number(dom, "domain.", "sigma1", c.sigma1);
  c.sigma2 = number(dom, "domain.", "sigma2", c.sigma2);
  c.d0 = number(dom, "domain.", "d0", c.d0);
  if (!(c.outer_radius > 0.0)) config_error("domain.outer_radius", "must be positive");
  if (!(c.sigma1 > 0.0)) config_error("domain.sigma1", "must be positive");
  if (!(c.sigma2 > 0.0)) config_error("domain.sigma2", "must be positive");
  if (!(c.d0 > 0.0)) config_error("domain.d0", "must be positive");

  const json& disc = section(root, "discretization");
  only_keys(disc, "discretization", {"n_outer", "n_inner"});
  c.n_outer = integer(disc, "discretization.", "n_outer", c.n_outer);
  c.n_inner = integer(disc, "discretization.", "n_inner", c.n_inner);
  if (c.n_outer < 32 || c.n_outer % 2 != 0) config_error("discretization.n_outer", "must be even and >= 32");
  if (c.n_inner < 32 || c.n_inner % 2 != 0) config_error("discretization.n_inner", "must be even and >= 32");

  if (!child(root, "target_shape")) config_error("target_shape", "required");
  c.target = shape(section(root, "target_shape"), "target_shape", ShapeParams::circle(Point::Zero(), 0.75));
  check_admissible(c.target, c.region(), "target_shape");
  c.initial = shape(section(root, "initial_shape"), "initial_shape", ShapeParams::circle(Point::Zero(), c.target.r0));
  check_admissible(c.initial, c.region(), "initial_shape");
  ShapeParams probe_default = c.target;
  probe_default.r0 *= 0.93;
  probe_default.center += Point(0.05, 0.02);
  c.probe = shape(section(root, "probe_shape"), "probe_shape", probe_default);
  check_admissible(c.probe, c.region(), "probe_shape");

  const json& data = section(root, "data");
  only_keys(data, "data", {"constant", "cos", "sin", "measurements"});
  c.data.constant = number(data, "data.", "constant", c.data.constant);
  c.data.cos_coeffs = numbers(data, "data.", "cos", c.data.cos_coeffs);
  c.data.sin_coeffs = numbers(data, "data.", "sin", c.data.sin_coeffs);
  c.data.measurements = text(data, "data.", "measurements", "");

  const json& opt = section(root, "optimizer");
  only_keys(opt, "optimizer", {"mode", "max_modes", "translations", "max_iter", "tol_grad", "tol_J", "armijo_c", "step0",
                               "mu0", "freeze_period", "workers"});
  const std::string mode = text(opt, "optimizer.", "mode", "lm");
  if (mode == "descent") c.optimizer.mode = OptimizerMode::descent;
  else if (mode == "lm") c.optimizer.mode = OptimizerMode::lm;
  else if (mode == "frozen") c.optimizer.mode = OptimizerMode::frozen;
  else config_error("optimizer.mode", "expected descent, lm or frozen");
  c.optimizer.basis.max_mode = integer(opt, "optimizer.", "max_modes", 4);
  c.optimizer.basis.translations = boolean(opt, "optimizer.", "translations", true);
  c.optimizer.max_iter = integer(opt, "optimizer.", "max_iter", 50);
  c.optimizer.tol_grad = number(opt, "optimizer.", "tol_grad", c.optimizer.tol_grad);
  c.optimizer.tol_J = number(opt, "optimizer.", "tol_J", c.optimizer.tol_J);
  c.optimizer.armijo_c = number(opt, "optimizer.", "armijo_c", c.optimizer.armijo_c);
  c.optimizer.step0 = number(opt, "optimizer.", "step0", c.optimizer.step0);
  c.optimizer.mu0 = number(opt, "optimizer.", "mu0", c.optimizer.mu0);
  c.optimizer.freeze_period = integer(opt, "optimizer.", "freeze_period", c.optimizer.freeze_period);
  const int workers = integer(opt, "optimizer.", "workers", 1);
  if (c.optimizer.basis.max_mode < 0) config_error("optimizer.max_modes", "must be >= 0");
  if (c.optimizer.max_iter < 0) config_error("optimizer.max_iter", "must be >= 0");
  if (!(c.optimizer.armijo_c > 0.0 && c.optimizer.armijo_c < 1.0)) config_error("optimizer.armijo_c", "must lie in (0, 1)");
  if (!(c.optimizer.step0 > 0.0)) config_error("optimizer.step0", "must be positive");
  if (!(c.optimizer.mu0 >= 0.0)) config_error("optimizer.mu0", "must be >= 0");
  if (c.optimizer.freeze_period < 1) config_error("optimizer.freeze_period", "must be >= 1");
  if (workers < 1) config_error("optimizer.workers", "must be >= 1");
  c.optimizer.workers = static_cast<unsigned>(workers);

  const json& spec = section(root, "spectrum");
  only_keys(spec, "spectrum", {"modes"});
  c.spectrum_modes = integer(spec, "spectrum.", "modes", c.spectrum_modes);
  if (c.spectrum_modes < 1 || 2 * c.spectrum_modes >= c.n_inner / 2) config_error("spectrum.modes", "must be >= 1 and well below n_inner / 4");

  const json& ver = section(root, "verify");
  only_keys(ver, "verify", {"taylor_steps"});
  c.taylor_steps = numbers(ver, "verify.", "taylor_steps", c.taylor_steps);
  if (c.taylor_steps.size() < 2) config_error("verify.taylor_steps", "need at least two steps");
  for (double t : c.taylor_steps) {
    if (!(t > 0.0)) config_error("verify.taylor_steps", "steps must be positive");
  }

  const json& out = section(root, "output");
  only_keys(out, "output", {"directory", "emit_svg"});
  c.out_dir = text(out, "output.", "directory", "");
  c.emit_svg = boolean(out, "output.", "emit_svg", true);
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, path + ": cannot open");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config, path + ": " + e.what());
  }
  return config_from_json(root);
}

inline json shape_to_json(const ShapeParams& p) {
  return {{"center", {p.center.x(), p.center.y()}}, {"r0", p.r0}, {"cos", p.cos_coeffs}, {"sin", p.sin_coeffs}};
}

/// Effective configuration, defaults included. Feeding it back to
/// config_from_json reproduces the same RunConfig.
inline json config_to_json(const RunConfig& c) {
  json j;
  j["domain"] = {{"outer_radius", c.outer_radius}, {"sigma1", c.sigma1}, {"sigma2", c.sigma2}, {"d0", c.d0}};
  j["discretization"] = {{"n_outer", c.n_outer}, {"n_inner", c.n_inner}};
  j["target_shape"] = shape_to_json(c.target);
  j["initial_shape"] = shape_to_json(c.initial);
  j["probe_shape"] = shape_to_json(c.probe);
  j["data"] = {{"constant", c.data.constant}, {"cos", c.data.cos_coeffs}, {"sin", c.data.sin_coeffs}};
  if (!c.data.measurements.empty()) j["data"]["measurements"] = c.data.measurements;
  const OptimizerOptions& o = c.optimizer;
  j["optimizer"] = {{"mode", to_string(o.mode)}, {"max_modes", o.basis.max_mode}, {"translations", o.basis.translations},
                    {"max_iter", o.max_iter}, {"tol_grad", o.tol_grad}, {"tol_J", o.tol_J},
                    {"armijo_c", o.armijo_c}, {"step0", o.step0}, {"mu0", o.mu0},
                    {"freeze_period", o.freeze_period}, {"workers", o.workers}};
  j["spectrum"] = {{"modes", c.spectrum_modes}};
  j["verify"] = {{"taylor_steps", c.taylor_steps}};
  j["output"] = {{"emit_svg", c.emit_svg}};
  if (!c.out_dir.empty()) j["output"]["directory"] = c.out_dir;
  return j;
}

/// 64-bit FNV-1a of the canonical (key-sorted, compact) configuration text.
inline std::uint64_t config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string default_run_name(const std::string& command, const RunConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  return command + "-" + buf;
}

/// Shortest round-trip decimal representation; identical inputs print identically.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Measurements {
  Vector theta, f, g;
};

inline Vector dirichlet_data(const DataSpec& d, const Vector& theta) {
  Vector f = Vector::Constant(theta.size(), d.constant);
  for (std::size_t k = 0; k < d.cos_coeffs.size(); ++k) f += d.cos_coeffs[k] * (static_cast<double>(k + 1) * theta).array().cos().matrix();
  for (std::size_t k = 0; k < d.sin_coeffs.size(); ++k) f += d.sin_coeffs[k] * (static_cast<double>(k + 1) * theta).array().sin().matrix();
  return f;
}

struct SynthResult {
  Measurements data;
  double mean_correction = 0.0;  // subtracted from g to enforce int g = 0
};

/// g = sigma1 d_n u_d on d Omega for the target inclusion, made exactly
/// mean-free in the trapezoidal rule.
inline SynthResult synth_measurements(const RunConfig& c, const ShapeParams& shape) {
  const Curve outer = c.outer_curve();
  const Vector theta = outer.param();
  const Vector f = dirichlet_data(c.data, theta);
  const TransmissionSolver solver(Geometry{outer, c.inner_curve(shape)}, c.conductivity());
  Vector g = c.sigma1 * solver.solve_dirichlet(JumpData::zero(c.n_inner), f).dnu_outer;
  const double mean = outer.integrate(g) / outer.perimeter();
  g.array() -= mean;
  return {{theta, f, g}, mean};
}

inline SynthResult synth_measurements(const RunConfig& c) { return synth_measurements(c, c.target); }

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, dir.string() + ": " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io, path.string() + ": write failed");
}

inline std::string measurements_csv(const Measurements& m) {
  std::string s = "theta,f,g\n";
  for (Eigen::Index i = 0; i < m.theta.size(); ++i) s += fmt(m.theta(i)) + "," + fmt(m.f(i)) + "," + fmt(m.g(i)) + "\n";
  return s;
}

/// Reads a "theta,f,g" file; theta must be strictly increasing in [0, 2 pi).
inline Measurements read_measurements(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line != "theta,f,g") throw Error(ErrorCode::io, path + ": header must be theta,f,g");
  std::vector<double> th, f, g;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw Error(ErrorCode::io, path + ": row " + std::to_string(row) + " needs three columns");
    }
    try {
      th.push_back(std::stod(a));
      f.push_back(std::stod(b));
      g.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw Error(ErrorCode::io, path + ": row " + std::to_string(row) + " is not numeric");
    }
    if (th.back() < 0.0 || th.back() >= two_pi || (th.size() > 1 && !(th.back() > th[th.size() - 2]))) {
      throw Error(ErrorCode::io, path + ": theta must increase strictly within [0, 2pi)");
    }
  }
  Measurements m;
  m.theta = Eigen::Map<Vector>(th.data(), static_cast<Eigen::Index>(th.size()));
  m.f = Eigen::Map<Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
  m.g = Eigen::Map<Vector>(g.data(), static_cast<Eigen::Index>(g.size()));
  return m;
}

/// Measurements for a run: read from data.measurements or synthesised from the target.
inline Measurements load_measurements(const RunConfig& c) {
  if (c.data.measurements.empty()) return synth_measurements(c).data;
  Measurements m = read_measurements(c.data.measurements);
  const Vector grid = parameter_grid(c.n_outer);
  if (m.theta.size() != grid.size() || (m.theta - grid).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::config, "data.measurements: theta must be the " + std::to_string(c.n_outer) + "-point equispaced grid");
  }
  const Curve outer = c.outer_curve();
  const double mean = outer.integrate(m.g);
  if (std::abs(mean) > 1e-10 * (1.0 + outer.integrate(m.g.cwiseAbs()))) {
    throw Error(ErrorCode::config, "data.measurements: g must have zero mean, got " + fmt(mean));
  }
  return m;
}

inline InverseProblem make_problem(const RunConfig& c, const Measurements& m) {
  return InverseProblem{c.outer_curve(), c.conductivity(), c.region(), m.f, m.g, c.n_inner};
}

inline std::string eigenvalues_csv(const SpectrumReport& r) {
  std::string s = "index,lambda\n";
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) s += std::to_string(i + 1) + "," + fmt(r.eigenvalues(i)) + "\n";
  return s;
}

inline std::string iterates_csv(const RunHistory& h) {
  std::string s = "iter,J,grad_norm,step\n";
  for (const Iterate& it : h.iterates) {
    s += std::to_string(it.iter) + "," + fmt(it.J) + "," + fmt(it.grad_norm) + "," + fmt(it.step) + "\n";
  }
  return s;
}

struct SvgCurve {
  std::string label;
  std::string color;
  PointSet points;
  bool dashed = false;
};

/// Closed polylines in a square viewport framing the outer boundary.
inline std::string overlay_svg(const std::vector<SvgCurve>& curves, double extent) {
  const double size = 480.0;
  const double scale = size / (2.2 * extent);
  auto px = [&](const Point& p) {
    return fmt(std::round((size / 2 + scale * p.x()) * 1000) / 1000) + "," +
           fmt(std::round((size / 2 - scale * p.y()) * 1000) / 1000);
  };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"520\" viewBox=\"0 0 480 520\">\n";
  s += "<rect width=\"480\" height=\"520\" fill=\"white\"/>\n";
  double legend_x = 10.0;
  for (const SvgCurve& c : curves) {
    s += "<polygon fill=\"none\" stroke=\"" + c.color + "\" stroke-width=\"1.5\"";
    if (c.dashed) s += " stroke-dasharray=\"6,4\"";
    s += " points=\"";
    for (Eigen::Index i = 0; i < c.points.rows(); ++i) s += (i ? " " : "") + px(c.points.row(i).transpose());
    s += "\"/>\n";
    s += "<text x=\"" + fmt(legend_x) + "\" y=\"505\" font-family=\"sans-serif\" font-size=\"13\" fill=\"" + c.color + "\">" +
         c.label + "</text>\n";
    legend_x += 110.0;
  }
  s += "</svg>\n";
  return s;
}

inline PointSet shape_polyline(const ShapeParams& p, int n = 256) {
  PointSet pts(n, 2);
  for (int j = 0; j < n; ++j) pts.row(j) = p.point(two_pi * j / n).transpose();
  return pts;
}

/// Hausdorff distance between two radial curves, sampled densely.
inline double curve_distance(const ShapeParams& a, const ShapeParams& b, int n = 1024) {
  const PointSet pa = shape_polyline(a, n);
  const PointSet pb = shape_polyline(b, n);
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, (pb.rowwise() - pa.row(i)).rowwise().norm().minCoeff());
    d = std::max(d, (pa.rowwise() - pb.row(i)).rowwise().norm().minCoeff());
  }
  return d;
}

inline json history_json(const RunHistory& h, const BasisSpec& basis) {
  json it = json::array();
  for (const Iterate& i : h.iterates) {
    json g = json::array();
    for (Eigen::Index k = 0; k < i.gradient.size(); ++k) g.push_back(i.gradient(k));
    it.push_back({{"iter", i.iter}, {"J", i.J}, {"grad_norm", i.grad_norm}, {"step", i.step}, {"mu", i.mu},
                  {"seconds", i.seconds}, {"shape", shape_to_json(i.params)}, {"gradient", g}});
  }
  json labels = json::array();
  for (std::size_t k = 0; k < basis.size(); ++k) labels.push_back(basis.label(k));
  return {{"status", h.status}, {"iterations", h.iterates.empty() ? 0 : h.iterates.size() - 1}, {"basis", labels},
          {"history", it}};
}

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // how value is compared with threshold
  bool pass = false;
};

struct VerifyReport {
  std::vector<Check> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

namespace detail {

inline Check at_most(std::string name, double value, double limit) {
  return {std::move(name), value, limit, "<=", std::isfinite(value) && value <= limit};
}

inline Check near(std::string name, double value, double target, double tol) {
  return {std::move(name), value, target, "+-" + fmt(tol), std::isfinite(value) && std::abs(value - target) <= tol};
}

// A remainder slope check, or an exact-zero check when the derivatives vanish identically.
inline Check slope_check(const std::string& name, const TaylorResult& r, bool use_second, double target, double tol,
                         bool degenerate) {
  const std::vector<double>& rem = use_second ? r.second : r.first;
  if (degenerate) {
    double worst = 0.0;
    for (double x : rem) worst = std::max(worst, std::abs(x));
    return at_most(name + ".exact_zero", worst, 1e-13 * (1.0 + r.scale));
  }
  return near(name, use_second ? r.slope_second : r.slope_first, target, tol);
}

}  // namespace detail

/// Battery of identities, oracle comparisons and Taylor fits on the configured geometry.
inline VerifyReport verify_suite(const RunConfig& c, bool flip_jump_sign = false) {
  using detail::at_most;
  using detail::near;
  VerifyReport rep;
  const Curve outer = c.outer_curve();
  const Curve target = c.inner_curve(c.target);
  const Conductivity sigma = c.conductivity();
  const bool no_contrast = sigma.jump() == 0.0;

  rep.checks.push_back(at_most("geometry.turning_number", std::abs(target.integrate(target.curvature()) - two_pi), 1e-8));
  double orth = 0.0;
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    orth = std::max(orth, std::abs(target.normal(j).dot(target.tangent(j))));
    orth = std::max(orth, std::abs(target.normal(j).norm() - 1.0));
  }
  rep.checks.push_back(at_most("geometry.frame_orthonormal", orth, 1e-12));
  for (const Curve* curve : {&outer, &target}) {
    const double err = (assemble_double_layer(*curve, false).apply(Vector::Ones(curve->size())).array() - 0.5).abs().maxCoeff();
    rep.checks.push_back(at_most(curve == &outer ? "potential.gauss_outer" : "potential.gauss_inner", err, 1e-10));
  }
  {
    const Vector th = outer.param();
    const Vector mode = (3.0 * th).array().cos();
    const double err = (assemble_single_layer(outer).apply(mode) + (c.outer_radius / 6.0) * mode).cwiseAbs().maxCoeff();
    rep.checks.push_back(at_most("potential.circle_single_layer", err, 1e-10));
  }

  const Measurements data = synth_measurements(c).data;
  const auto solver_t = std::make_shared<const TransmissionSolver>(Geometry{outer, target}, sigma);
  const StateBundle at_target(solver_t, data.f, data.g, flip_jump_sign);
  rep.checks.push_back(at_most("transmission.state_consistency", critical_mismatch(at_target), 1e-8));

  const Curve probe_curve = c.inner_curve(c.probe);
  const StateBundle probe(Geometry{outer, probe_curve}, sigma, data.f, data.g, flip_jump_sign);
  {
    const TransmissionSolution& u = probe.u_d();
    const double flux_in = sigma.sigma1 * probe_curve.integrate(u.dnu_plus);
    const double flux_out = sigma.sigma1 * outer.integrate(u.dnu_outer);
    const double scale = 1.0 + sigma.sigma1 * outer.integrate(u.dnu_outer.cwiseAbs());
    rep.checks.push_back(at_most("transmission.flux_balance", std::abs(flux_in - flux_out) / scale, 1e-8));
    rep.checks.push_back(at_most("transmission.interior_flux", std::abs(probe_curve.integrate(u.dnu_minus)) / scale, 1e-8));
  }

  const DeformationField h = mixed_test_field(probe_curve);
  const Point annulus_point = c.probe.center + 0.5 * (c.outer_radius + c.probe.radius(0.3) - c.probe.center.norm()) *
                                                   Point(std::cos(0.3), std::sin(0.3));
  const TaylorResult ts = taylor_states(probe, h, annulus_point, c.probe.center, c.taylor_steps);
  const TaylorResult tj = taylor_kv(probe, h, c.taylor_steps);
  rep.checks.push_back(detail::slope_check("taylor.states_first_order", ts, false, 2.0, 0.1, no_contrast));
  rep.checks.push_back(detail::slope_check("taylor.kv_first_order", tj, false, 2.0, 0.1, no_contrast));
  rep.checks.push_back(detail::slope_check("taylor.kv_second_order", tj, true, 3.0, 0.2, no_contrast));
  rep.checks.push_back(detail::slope_check("taylor.states_second_order", ts, true, 3.0, 0.2, no_contrast));

  const DeformationField tangential{Vector::Zero(probe_curve.size()), h.tangential};
  rep.checks.push_back(at_most("structure.tangential_gradient", std::abs(kv_gradient(probe, tangential)), 0.0));
  if (!no_contrast) {
    const TaylorResult tt = taylor_tangential(probe, h, c.taylor_steps);
    rep.checks.push_back({"structure.tangential_second_order", tt.slope_first, 1.9, ">=", tt.slope_first >= 1.9});
  }

  {
    const Vector& t = probe_curve.param();
    const DeformationField h2{(t.array().sin() - 0.4 * (3.0 * t).array().cos()).matrix(), (0.3 * (2.0 * t).array().cos()).matrix()};
    const double a = kv_hessian(probe, h, h2);
    const double b = kv_hessian(probe, h2, h);
    const double scale = std::max({std::abs(a), std::abs(kv_hessian(probe, h, h)), 1e-300});
    rep.checks.push_back(at_most("hessian.symmetry", std::abs(a - b) / scale, 1e-8));
    if (no_contrast) {
      rep.checks.push_back(at_most("derivatives.exact_zero", std::abs(kv_gradient(probe, h)) + std::abs(a), 0.0));
    }
  }

  const double j_scale = outer.integrate(data.f.cwiseAbs2());
  rep.checks.push_back(at_most("critical.kv_value", kv_value(at_target) / j_scale, 1e-12));
  if (!no_contrast) {
    const BasisSpec basis{c.optimizer.basis.max_mode, c.optimizer.basis.translations};
    const auto fields = basis_fields(target, basis);
    const GradientHessian gh = assemble_gradient_and_hessian(at_target, fields, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      worst = std::max(worst, std::abs(gh.gradient(static_cast<Eigen::Index>(i))) / gradient_scale(at_target, fields[i]));
    }
    rep.checks.push_back(at_most("critical.gradient", worst, 1e-6));

    const auto normal_fields = fourier_normal_fields(target, c.spectrum_modes);
    const Matrix M = hessian_at_critical(at_target, normal_fields);
    const SpectrumReport spec = spectrum_report(M);
    rep.checks.push_back({"critical.min_eigenvalue", spec.min_eigenvalue, -1e-10 * spec.eigenvalues.maxCoeff(), ">=",
                          spec.positive});
    const double energy = critical_energy(at_target, normal_fields[0]);
    rep.checks.push_back(near("critical.hessian_to_energy_ratio", M(0, 0) / energy, 2.0, 1e-6));
    const Eigen::Index last = spec.eigenvalues.size() - 1;
    rep.checks.push_back(at_most("spectrum.decay_ratio", spec.eigenvalues(last) / spec.eigenvalues(0),
                                 c.spectrum_modes >= 8 ? 1e-4 : 1.0));
  }
  return rep;
}

inline json verify_json(const VerifyReport& r) {
  json arr = json::array();
  for (const Check& c : r.checks) {
    arr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"relation", c.relation},
                   {"pass", c.pass}});
  }
  return {{"passed", r.all_passed()}, {"checks", arr}};
}

inline std::string verify_csv(const VerifyReport& r) {
  std::string s = "check,value,relation,threshold,pass\n";
  for (const Check& c : r.checks) {
    s += c.name + "," + fmt(c.value) + "," + c.relation + "," + fmt(c.threshold) + "," + (c.pass ? "1" : "0") + "\n";
  }
  return s;
}

inline json report_header(const std::string& command, const RunConfig& c) {
  return {{"toolkit", "kvshape"}, {"version", toolkit_version}, {"command", command}, {"config", config_to_json(c)}};
}

}  // namespace kvshape

#endif  // KVSHAPE_CLI_IO_HPP
