// Command-line driver: synth, forward, verify, reconstruct, spectrum.
// Exit codes: 0 success, 2 configuration error, 3 solver or I/O failure,
// 4 verification failure.

#include "kvshape/cli_io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>

namespace fs = std::filesystem;
using namespace kvshape;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_solver = 3;
constexpr int exit_verify = 4;

struct Options {
  std::string command;
  std::string config;
  std::string out;
  bool flip_jump_sign = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path output_dir(const Options& o, const RunConfig& c) {
  if (!o.out.empty()) return o.out;
  if (!c.out_dir.empty()) return c.out_dir;
  return fs::path("runs") / default_run_name(o.command, c);
}

int run_synth(const RunConfig& c, const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const SynthResult s = synth_measurements(c);
  write_text(dir / "measurements.csv", measurements_csv(s.data));
  json rep = report_header("synth", c);
  rep["rows"] = s.data.theta.size();
  rep["g_mean_correction"] = s.mean_correction;
  rep["timings"] = {{"total_seconds", seconds_since(t0)}};
  write_text(dir / "report.json", rep.dump(2) + "\n");
  std::cout << "wrote " << (dir / "measurements.csv").string() << " (mean correction " << fmt(s.mean_correction) << ")\n";
  return exit_ok;
}

int run_forward(const RunConfig& c, const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Measurements m = load_measurements(c);
  const StateBundle b(Geometry{c.outer_curve(), c.inner_curve(c.initial)}, c.conductivity(), m.f, m.g);
  std::string outer = "theta,u_d,dnu_d,u_n,dnu_n\n";
  for (Eigen::Index i = 0; i < m.theta.size(); ++i) {
    outer += fmt(m.theta(i)) + "," + fmt(b.u_d().u_outer(i)) + "," + fmt(b.u_d().dnu_outer(i)) + "," +
             fmt(b.u_n().u_outer(i)) + "," + fmt(b.u_n().dnu_outer(i)) + "\n";
  }
  std::string inner = "t,x,y,u_d,dnu_d_plus,dnu_d_minus,u_n,dnu_n_plus,dnu_n_minus\n";
  const Curve& in = b.inner();
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    inner += fmt(in.param()(i)) + "," + fmt(in.nodes()(i, 0)) + "," + fmt(in.nodes()(i, 1)) + "," +
             fmt(b.u_d().u_plus(i)) + "," + fmt(b.u_d().dnu_plus(i)) + "," + fmt(b.u_d().dnu_minus(i)) + "," +
             fmt(b.u_n().u_plus(i)) + "," + fmt(b.u_n().dnu_plus(i)) + "," + fmt(b.u_n().dnu_minus(i)) + "\n";
  }
  write_text(dir / "traces_outer.csv", outer);
  write_text(dir / "traces_inner.csv", inner);
  const GradientHessian gh = assemble_gradient_and_hessian(b, c.optimizer.basis, false);
  json rep = report_header("forward", c);
  rep["J"] = kv_value(b);
  json grad = json::object();
  for (std::size_t k = 0; k < c.optimizer.basis.size(); ++k) grad[c.optimizer.basis.label(k)] = gh.gradient(static_cast<Eigen::Index>(k));
  rep["gradient"] = grad;
  rep["timings"] = {{"total_seconds", seconds_since(t0)}};
  write_text(dir / "report.json", rep.dump(2) + "\n");
  std::cout << "J = " << fmt(kv_value(b)) << "\n";
  return exit_ok;
}

int run_verify(const RunConfig& c, const fs::path& dir, bool flip) {
  const auto t0 = std::chrono::steady_clock::now();
  const VerifyReport r = verify_suite(c, flip);
  write_text(dir / "verify.csv", verify_csv(r));
  json rep = report_header("verify", c);
  rep["jump_sign_flipped"] = flip;
  rep["verification"] = verify_json(r);
  rep["timings"] = {{"total_seconds", seconds_since(t0)}};
  write_text(dir / "report.json", rep.dump(2) + "\n");
  for (const Check& ch : r.checks) {
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << "  " << fmt(ch.value) << " " << ch.relation << " "
              << fmt(ch.threshold) << "\n";
  }
  if (!r.all_passed()) {
    std::cerr << "verification failed:";
    for (const Check& ch : r.checks) {
      if (!ch.pass) std::cerr << " " << ch.name;
    }
    std::cerr << "\n";
    return exit_verify;
  }
  return exit_ok;
}

int run_reconstruct(const RunConfig& c, const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Measurements m = load_measurements(c);
  RunHistory hist;
  int code = exit_ok;
  try {
    hist = reconstruct(make_problem(c, m), c.initial, c.optimizer);
  } catch (const LineSearchFailed& e) {
    hist = e.history;
    std::cerr << e.what() << "\n";
    code = exit_solver;
  }
  write_text(dir / "iterates.csv", iterates_csv(hist));
  json rep = report_header("reconstruct", c);
  rep["run"] = history_json(hist, c.optimizer.basis);
  rep["final_shape"] = shape_to_json(hist.last().params);
  rep["distance_to_target"] = curve_distance(hist.last().params, c.target);
  rep["timings"] = {{"total_seconds", seconds_since(t0)}};
  write_text(dir / "report.json", rep.dump(2) + "\n");
  if (c.emit_svg) {
    const std::vector<SvgCurve> curves{
        {"domain", "#444444", shape_polyline(ShapeParams::circle(Point::Zero(), c.outer_radius)), false},
        {"target", "#1b7f3a", shape_polyline(c.target), false},
        {"initial", "#888888", shape_polyline(c.initial), true},
        {"final", "#c0392b", shape_polyline(hist.last().params), false}};
    write_text(dir / "overlay.svg", overlay_svg(curves, c.outer_radius));
  }
  std::cout << hist.status << ": " << hist.iterates.size() - 1 << " iterations, J " << fmt(hist.iterates.front().J)
            << " -> " << fmt(hist.last().J) << "\n";
  return code;
}

int run_spectrum(const RunConfig& c, const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Measurements m = load_measurements(c);
  const Curve target = c.inner_curve(c.target);
  const StateBundle b(Geometry{c.outer_curve(), target}, c.conductivity(), m.f, m.g);
  const auto fields = fourier_normal_fields(target, c.spectrum_modes);
  std::vector<std::string> labels;
  for (int k = 1; k <= c.spectrum_modes; ++k) {
    labels.push_back("cos" + std::to_string(k));
    labels.push_back("sin" + std::to_string(k));
  }
  const Matrix M = hessian_at_critical(b, fields, c.optimizer.workers);
  const SpectrumReport r = spectrum_report(M, labels);
  write_text(dir / "eigenvalues.csv", eigenvalues_csv(r));
  json rep = report_header("spectrum", c);
  rep["basis"] = labels;
  rep["basis_note"] = "L2-orthonormal Fourier modes of h_n on the inclusion boundary";
  std::vector<double> ev(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  rep["eigenvalues"] = ev;
  rep["decay_fit"] = {{"slope", r.decay_slope}, {"intercept", r.decay_intercept}};
  rep["min_eigenvalue"] = r.min_eigenvalue;
  rep["positive"] = r.positive;
  rep["timings"] = {{"total_seconds", seconds_since(t0)}};
  write_text(dir / "report.json", rep.dump(2) + "\n");
  std::cout << "lambda_1 = " << fmt(r.eigenvalues(0)) << ", lambda_last = " << fmt(r.eigenvalues(r.eigenvalues.size() - 1))
            << ", log-linear slope " << fmt(r.decay_slope) << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kohn-Vogelius shape inversion toolkit"};
  app.require_subcommand(1, 1);
  Options o;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "JSON run configuration")->required();
    sub->add_option("--out", o.out, "output directory (default runs/<command>-<config hash>)");
    return sub;
  };
  add("synth", "synthesise the measurement pair (f, g) for the target inclusion");
  add("forward", "solve both states on the initial shape and report J and its gradient");
  CLI::App* verify = add("verify", "run the derivative and identity checks");
  verify->add_flag("--debug-flip-jump-sign", o.flip_jump_sign, "reverse the jump orientation (negative control)");
  add("reconstruct", "reconstruct the inclusion from the measurements");
  add("spectrum", "eigenvalues of the shape Hessian at the target");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    const RunConfig c = parse_config(o.config);
    const fs::path dir = output_dir(o, c);
    ensure_directory(dir);
    if (o.command == "synth") return run_synth(c, dir);
    if (o.command == "forward") return run_forward(c, dir);
    if (o.command == "verify") return run_verify(c, dir, o.flip_jump_sign);
    if (o.command == "reconstruct") return run_reconstruct(c, dir);
    return run_spectrum(c, dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::config ? exit_config : exit_solver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_solver;
  }
}
