#include "effdyn/runner.hpp"

#include "effdyn/convergence.hpp"
#include "effdyn/csv.hpp"
#include "effdyn/density.hpp"
#include "effdyn/errors.hpp"
#include "effdyn/io.hpp"
#include "effdyn/lattice.hpp"
#include "effdyn/onebody.hpp"
#include "effdyn/scattering.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <numbers>
#include <random>
#include <sstream>

namespace effdyn {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Output sink shared by the experiment drivers.
struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunManifest& manifest;

  bool writes_data() const { return !opts.check_only; }

  void emit(const std::string& name, const Series& s) {
    if (!writes_data()) return;
    emit_series(s, opts.out_dir / name);
    manifest.outputs.push_back(name);
  }
  void emit_text(const std::string& name, const std::string& text) {
    if (!writes_data()) return;
    write_text(opts.out_dir / name, text);
    manifest.outputs.push_back(name);
  }
  void check(const std::string& name, bool passed, const std::string& detail) {
    manifest.checks.push_back({name, passed, detail});
  }
  void result(const std::string& name, double value) { manifest.results[name] = value; }
};

std::string fmt(double v) { return format_double(v); }

RadialPotential make_potential(const ExperimentConfig& c) {
  const std::string& kind = c.text("potential.kind");
  const double v0 = c.real("potential.v0");
  const double radius = c.real("potential.radius");
  if (kind == "zero") return RadialPotential::zero(radius);
  if (kind == "square_well") return RadialPotential::square_well(v0, radius);
  if (kind == "gaussian") return RadialPotential::gaussian(v0, radius);
  return RadialPotential::inverse_power(v0, radius, c.real("potential.power"));
}

GridSpec make_grid(const ExperimentConfig& c) {
  return GridSpec(static_cast<int>(c.integer("grid.dimension")), static_cast<int>(c.integer("grid.points")),
                  c.real("grid.box_length"));
}

std::array<double, 3> triple(const std::vector<double>& v) {
  std::array<double, 3> out{0, 0, 0};
  for (size_t i = 0; i < v.size() && i < 3; ++i) out[i] = v[i];
  return out;
}

void run_scatter(Context& ctx) {
  const auto& c = ctx.cfg;
  const RadialPotential v = make_potential(c);
  const ScatteringOptions opts{c.real("solver.r_max"), c.real("solver.step")};
  const ScatteringSolution sol = solve_zero_energy(v, opts);
  const double a_int = scattering_length_integral(v, sol);
  ctx.result("a0", sol.a0);
  ctx.result("a0_integral", a_int);
  ctx.result("residual", sol.residual);
  ctx.result("slope_deviation", sol.slope_deviation);
  ctx.emit("scattering.csv", scattering_table(v, sol));

  const double scale = std::max(std::abs(sol.a0), 1e-300);
  const double route_gap = std::abs(a_int - sol.a0);
  // Rounding in the tail fit leaves an absolute floor proportional to r_max.
  const double floor = 1e-10 * opts.r_max;
  ctx.check("routes_agree", route_gap <= 1e-6 * scale || route_gap <= floor,
            "|a0_integral - a0_fit| = " + fmt(route_gap));
  ctx.check("a0_in_range", sol.a0 >= -floor && sol.a0 < opts.r_max, "a0 = " + fmt(sol.a0));

  Series scaling({"N", "a0_N", "a0_over_N", "relative_error"});
  double worst = 0.0;
  for (auto n : c.int_list("scaling.n_list")) {
    const double an = scaled_scattering_length(v, static_cast<int>(n), opts);
    const double expected = sol.a0 / static_cast<double>(n);
    const double err = expected != 0.0 ? std::abs(an - expected) / std::abs(expected) : std::abs(an);
    worst = std::max(worst, err);
    scaling.add_row({static_cast<double>(n), an, expected, err});
  }
  ctx.emit("scaling.csv", scaling);
  ctx.check("scaling_identity", worst <= 1e-8, "max relative error " + fmt(worst));
}

EvolutionModel make_evolution_model(const ExperimentConfig& c, const GridSpec& g) {
  const std::string& kind = c.text("model.kind");
  const Dispersion d =
      c.text("model.dispersion") == "semirelativistic" ? Dispersion::semirelativistic : Dispersion::laplacian;
  const double coupling = c.real("model.coupling");
  EvolutionModel m;
  if (kind == "linear") {
    m = EvolutionModel::linear(d);
  } else if (kind == "hartree") {
    const double w = c.real("model.kernel_width");
    m = EvolutionModel::hartree(coupling, KernelSpec::radial(g, [w](double r) { return std::exp(-r * r / (2 * w * w)); }),
                                d);
  } else if (kind == "sr_hartree") {
    m = EvolutionModel::sr_hartree(coupling, c.real("model.alpha"));
    m.dispersion = d;
  } else {
    m = EvolutionModel::gp(coupling);
    m.dispersion = d;
  }
  if (c.real("model.trap_curvature") > 0.0) m = m.with_trap(TrapSpec::harmonic(g, c.real("model.trap_curvature")));
  return m;
}

double max_mass_drift(const Series& s) {
  double worst = 0.0;
  for (double m : s.column("mass")) worst = std::max(worst, std::abs(m - 1.0));
  return worst;
}

void run_evolve(Context& ctx) {
  const auto& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  const EvolutionModel model = make_evolution_model(c, g);
  const Field initial =
      gaussian_field(g, c.real("initial.width"), triple(c.real_list("initial.center")), triple(c.real_list("initial.momentum")));
  const StepperConfig sc{c.real("stepper.dt"), static_cast<int>(c.integer("stepper.steps_per_output"))};
  const EvolutionRun run = run_evolution(initial, model, sc, static_cast<int>(c.integer("stepper.steps")));
  ctx.emit("series.csv", run.series);
  if (ctx.writes_data()) {
    write_field(run.final_state, ctx.opts.out_dir / "final_state.bin");
    ctx.manifest.outputs.push_back("final_state.bin");
  }
  const auto energies = run.series.column("energy");
  ctx.result("energy_initial", energies.front());
  ctx.result("energy_final", energies.back());
  const double drift = max_mass_drift(run.series);
  ctx.check("mass_conserved", drift <= 1e-10, "max |mass - 1| = " + fmt(drift));
}

void run_minimize(Context& ctx) {
  const auto& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  EvolutionModel model = EvolutionModel::gp(c.real("model.coefficient"));
  if (c.real("model.trap_curvature") > 0.0) model = model.with_trap(TrapSpec::harmonic(g, c.real("model.trap_curvature")));
  const Field initial = gaussian_field(g, c.real("initial.width"));
  const ImaginaryTimeConfig ic{c.real("imaginary.dtau"), c.real("imaginary.tolerance"),
                               static_cast<int>(c.integer("imaginary.max_iterations"))};
  const GroundState gs = minimize_imaginary_time(model, initial, ic);
  Series s({"iteration", "energy"});
  bool monotone = true;
  for (size_t i = 0; i < gs.energy_history.size(); ++i) {
    s.add_row({static_cast<double>(i), gs.energy_history[i]});
    if (i > 0 && gs.energy_history[i] > gs.energy_history[i - 1] + 1e-14 * std::max(1.0, std::abs(gs.energy_history[i])))
      monotone = false;
  }
  ctx.emit("energy.csv", s);
  if (ctx.writes_data()) {
    write_field(gs.state, ctx.opts.out_dir / "ground_state.bin");
    ctx.manifest.outputs.push_back("ground_state.bin");
  }
  ctx.result("energy", gs.energy);
  ctx.result("iterations", gs.iterations);
  ctx.check("energy_monotone", monotone, "imaginary-time energies are non-increasing");
  ctx.check("converged", gs.converged, "decrease below tolerance after " + std::to_string(gs.iterations) + " iterations");
}

void run_blowup(Context& ctx) {
  const auto& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  double alpha = c.real("model.alpha");
  if (c.integer("model.regularization_n") > 0)
    alpha = regularization_alpha(static_cast<int>(c.integer("model.regularization_n")), c.real("model.beta"));
  ctx.result("alpha", alpha);
  const EvolutionModel model = EvolutionModel::sr_hartree(c.real("model.lambda"), alpha);
  const StepperConfig sc{c.real("stepper.dt"), static_cast<int>(c.integer("stepper.steps_per_output"))};
  const SplitStepper stepper(g, model, sc);
  Field phi = gaussian_field(g, c.real("initial.width"));
  const double initial_norm = norm(phi, NormKind::h_half);
  const double threshold = c.real("monitor.threshold_factor") * initial_norm;
  const int window = static_cast<int>(c.integer("monitor.window"));
  const bool stop = c.boolean("monitor.stop_on_detection");
  const int steps = static_cast<int>(c.integer("stepper.steps"));

  Series s({"t", "h_half", "mass", "energy"});
  std::vector<double> times, norms;
  auto record = [&](double t) {
    const double h = norm(phi, NormKind::h_half);
    s.add_row({t, h, l2_norm(phi) * l2_norm(phi), stepper.energy(phi)});
    times.push_back(t);
    norms.push_back(h);
  };
  record(0.0);
  std::string abort_message;
  for (int i = 1; i <= steps; ++i) {
    try {
      phi = stepper.step(phi);
    } catch (const EvolutionAbort& e) {
      abort_message = e.what();
      ctx.result("aborted_at", e.time);
      break;
    }
    if (i % sc.steps_per_output == 0) {
      record(i * sc.dt);
      if (stop && monitor_blowup(times, norms, threshold, window).blew_up) break;
    }
  }
  const BlowupVerdict verdict = monitor_blowup(times, norms, threshold, window);
  ctx.emit("blowup.csv", s);
  ctx.result("h_half_initial", initial_norm);
  ctx.result("threshold", threshold);
  ctx.result("h_half_max", *std::max_element(norms.begin(), norms.end()));
  ctx.result("blew_up", verdict.blew_up ? 1.0 : 0.0);
  if (verdict.detection_time) ctx.result("detection_time", *verdict.detection_time);
  const double drift = max_mass_drift(s);
  ctx.check("mass_conserved", drift <= 1e-10 * std::max(1.0, steps / 1e4), "max |mass - 1| = " + fmt(drift));
  if (!abort_message.empty()) throw NumericalAbort(abort_message);
}

void run_critical(Context& ctx) {
  const auto& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  const Field trial = gaussian_field(g, c.real("trial.width"));
  const CriticalEstimate est = estimate_critical_coupling(trial, c.real_list("scan.mu_list"), c.real_list("scan.lambda_list"));
  Series s({"lambda", "mu", "energy"});
  for (size_t l = 0; l < est.lambda_grid.size(); ++l)
    for (size_t m = 0; m < est.mu_grid.size(); ++m) s.add_row({est.lambda_grid[l], est.mu_grid[m], est.energies[l][m]});
  ctx.emit("critical.csv", s);
  ctx.emit_text("critical_summary.txt", "trial family: " + est.trial_family + "\nlower: " + fmt(est.lower) +
                                            "\nupper: " + fmt(est.upper) + "\n");
  ctx.result("lower", est.lower);
  ctx.result("upper", est.upper);
  const bool bracket = !std::isfinite(est.lower) || !std::isfinite(est.upper) || est.lower < est.upper;
  ctx.check("bracket_ordered", bracket, "lower = " + fmt(est.lower) + ", upper = " + fmt(est.upper));
}

Eigen::VectorXcd lattice_orbital(const ExperimentConfig& c, int sites, double spacing) {
  Eigen::VectorXcd psi(sites);
  const GridSpec g(1, sites, sites * spacing);
  if (c.text("initial.kind") == "random") {
    std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("run.seed")));
    std::normal_distribution<double> normal;
    for (int i = 0; i < sites; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      psi(i) = Complex(re, im);
    }
  } else {
    const double w = c.real("initial.width");
    const double p = c.real("initial.momentum");
    for (int i = 0; i < sites; ++i) {
      const double x = g.coordinate(i);
      psi(i) = std::exp(-x * x / (2 * w * w)) * std::polar(1.0, p * x);
    }
  }
  return psi / psi.norm();
}

Eigen::VectorXd lattice_potential(const ExperimentConfig& c, int sites, double spacing) {
  const std::string& kind = c.text("interaction.potential");
  const double strength = c.real("interaction.strength");
  const double range = c.real("interaction.range");
  if (kind == "zero") return Eigen::VectorXd::Zero(sites);
  if (kind == "contact") {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(sites);
    v(0) = strength;
    return v;
  }
  return lattice_pair_potential(sites, spacing,
                                [=](double r) { return strength * std::exp(-r * r / (2 * range * range)); });
}

Dispersion lattice_dispersion(const ExperimentConfig& c) {
  return c.text("lattice.dispersion") == "semirelativistic" ? Dispersion::semirelativistic : Dispersion::laplacian;
}

void run_manybody(Context& ctx) {
  const auto& c = ctx.cfg;
  const int m = static_cast<int>(c.integer("lattice.sites"));
  const int n = static_cast<int>(c.integer("lattice.n_particles"));
  const double spacing = c.real("lattice.spacing");
  const CouplingRule rule = c.text("interaction.coupling_rule") == "raw" ? CouplingRule::raw : CouplingRule::mean_field;
  const LatticeModel model = LatticeModel::make(m, n, spacing, lattice_dispersion(c), lattice_potential(c, m, spacing),
                                                rule, c.real("interaction.coupling"));
  auto basis = std::make_shared<const SymmetricBasis>(n, m, c.integer("basis.cap"));
  const LatticeHamiltonian h(basis, model, ctx.opts.threads);
  const KrylovPropagator prop(h, KrylovConfig{c.real("propagation.dt"), static_cast<int>(c.integer("propagation.krylov_dim")),
                                              c.real("propagation.tolerance")});
  ManyBodyState state = product_state(lattice_orbital(c, m, spacing), basis);
  const int samples = static_cast<int>(c.integer("propagation.samples"));
  const double horizon = c.real("propagation.t");
  const int k = static_cast<int>(c.integer("propagation.k"));

  Series s({"t", "norm", "energy", "kinetic_sr", "trace_distance_initial"});
  const ReducedDensity g0 = reduce(state, 1, spacing);
  const double e0 = h.expectation(state.amplitudes);
  double norm_drift = 0.0, energy_drift = 0.0, min_eig = 0.0, trace_err = 0.0;
  PropagationReport report;
  for (int i = 0; i <= samples; ++i) {
    if (i > 0) state.amplitudes = prop.advance(state.amplitudes, horizon / samples, &report);
    const double t = horizon * i / samples;
    const ReducedDensity g1 = reduce(state, 1, spacing);
    const double e = h.expectation(state.amplitudes);
    norm_drift = std::max(norm_drift, std::abs(state.amplitudes.norm() - 1.0));
    energy_drift = std::max(energy_drift, std::abs(e - e0));
    s.add_row({t, state.amplitudes.norm(), e, kinetic_of_density(g1), trace_distance(g1, g0)});
  }
  const ReducedDensity gk = reduce(state, k, spacing);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gk.kernel, Eigen::EigenvaluesOnly);
  min_eig = es.eigenvalues().minCoeff();
  trace_err = std::abs(gk.kernel.trace().real() - 1.0);
  ctx.emit("observables.csv", s);
  ctx.emit_text("rdm_k" + std::to_string(k) + ".csv", format_reduced_density({n, horizon, gk}));
  if (ctx.writes_data()) {
    write_state(state, ctx.opts.out_dir / "final_state.bin");
    ctx.manifest.outputs.push_back("final_state.bin");
  }
  ctx.result("basis_dimension", static_cast<double>(basis->dimension()));
  ctx.result("energy", e0);
  ctx.result("max_local_error", report.max_local_error);
  ctx.check("norm_conserved", norm_drift <= 1e-10, "max |norm - 1| = " + fmt(norm_drift));
  ctx.check("energy_conserved", energy_drift <= 1e-8 * std::max(1.0, std::abs(e0)), "max |E - E0| = " + fmt(energy_drift));
  ctx.check("density_trace", trace_err <= 1e-10, "|Tr gamma - 1| = " + fmt(trace_err));
  ctx.check("density_positive", min_eig >= -1e-10, "min eigenvalue " + fmt(min_eig));
}

std::string compact(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

void run_converge(Context& ctx) {
  const auto& c = ctx.cfg;
  const int m = static_cast<int>(c.integer("lattice.sites"));
  const double spacing = c.real("lattice.spacing");
  MeanFieldStudyConfig sc;
  sc.orbital = lattice_orbital(c, m, spacing);
  sc.spacing = spacing;
  sc.dispersion = lattice_dispersion(c);
  sc.pair_potential = lattice_potential(c, m, spacing);
  sc.kappa = c.real("interaction.kappa");
  for (auto n : c.int_list("study.n_list")) sc.n_list.push_back(static_cast<int>(n));
  sc.horizon = c.real("study.horizon");
  sc.dt = c.real("study.dt");
  sc.samples = static_cast<int>(c.integer("study.samples"));
  sc.hartree_substeps = static_cast<int>(c.integer("study.hartree_substeps"));
  sc.krylov_dim = static_cast<int>(c.integer("study.krylov_dim"));
  sc.krylov_tolerance = c.real("study.tolerance");
  sc.basis_cap = c.integer("study.basis_cap");
  sc.threads = ctx.opts.threads;
  const ConvergenceReport report = mean_field_study(sc);

  std::string ns;
  for (size_t i = 0; i < sc.n_list.size(); ++i) ns += (i ? "-" : "") + std::to_string(sc.n_list[i]);
  const std::string stem = "convergence_M" + std::to_string(m) + "_N" + ns + "_kappa" + compact(sc.kappa) + "_T" +
                           compact(sc.horizon) + "_dt" + compact(sc.dt);
  ctx.emit(stem + ".csv", report.to_series());
  ctx.emit_text(stem + "_summary.txt", report.summary());

  const int mid = static_cast<int>(report.times.size()) / 2;
  ctx.result("slope_mid", report.fitted_slope[mid]);
  ctx.result("time_mid", report.times[mid]);
  ctx.result("max_local_error", report.max_local_error);

  double t0 = 0.0, dmax = 0.0, bound_gap = 0.0;
  for (Eigen::Index i = 0; i < report.distances.rows(); ++i) {
    if (std::isnan(report.distances(i, 0))) continue;
    t0 = std::max(t0, report.distances(i, 0));
    for (Eigen::Index t = 0; t < report.distances.cols(); ++t) {
      dmax = std::max(dmax, report.distances(i, t));
      bound_gap = std::max(bound_gap, report.distances(i, t) - report.energy_distances(i, t));
    }
  }
  ctx.check("initial_distance", t0 <= 1e-10, "max distance at t = 0: " + fmt(t0));
  ctx.check("distance_range", dmax <= 2.0, "max distance " + fmt(dmax));
  ctx.check("energy_norm_bound", bound_gap <= 1e-10, "max(trace - energy distance) = " + fmt(bound_gap));
  std::string notes;
  for (const auto& d : report.diagnostics) notes += (notes.empty() ? "" : "; ") + d;
  ctx.check("complete", report.complete, report.complete ? "all legs ran" : notes);
}

void run_hierarchy(Context& ctx) {
  const auto& c = ctx.cfg;
  const GridSpec g(1, static_cast<int>(c.integer("grid.points")), c.real("grid.box_length"));
  const RadialPotential v = make_potential(c);
  const ScatteringOptions so = ScatteringOptions::defaults_for(v);
  const ScatteringSolution sol = solve_zero_energy(v, so);
  const double a0 = scattering_length_integral(v, sol);
  const double b0 = potential_integral(v, so.r_max, so.step);
  const double coefficient = 8.0 * std::numbers::pi * a0;

  HierarchyConfig hc{gaussian_field(g, c.real("initial.width"), {0, 0, 0}, {c.real("initial.momentum"), 0, 0})};
  hc.evolution_coefficient = coefficient;
  hc.residual_coefficient = c.text("hierarchy.residual") == "b0" ? b0 : coefficient;
  hc.k_list.clear();
  for (auto k : c.int_list("hierarchy.k_list")) hc.k_list.push_back(static_cast<int>(k));
  hc.time = c.real("hierarchy.time");
  hc.dts = c.real_list("hierarchy.dt_list");
  hc.tensor_cap = c.integer("hierarchy.tensor_cap");
  const HierarchyResidualReport report = hierarchy_residual_factorized(hc);
  ctx.emit("hierarchy.csv", report.to_series());
  ctx.result("a0", a0);
  ctx.result("b0", b0);
  ctx.result("evolution_coefficient", coefficient);
  ctx.result("residual_coefficient", hc.residual_coefficient);
  for (size_t i = 0; i < report.k_list.size(); ++i)
    ctx.result("mismatch_prediction_k" + std::to_string(report.k_list[i]), report.mismatch_prediction(i));
  const bool ok = report.residual.allFinite() && (report.residual.array() >= 0.0).all();
  ctx.check("residuals_valid", ok, "residuals finite and non-negative");
}

void dispatch(Context& ctx) {
  const std::string& e = ctx.cfg.experiment;
  if (e == "scatter") return run_scatter(ctx);
  if (e == "evolve") return run_evolve(ctx);
  if (e == "minimize") return run_minimize(ctx);
  if (e == "blowup") return run_blowup(ctx);
  if (e == "critical") return run_critical(ctx);
  if (e == "manybody") return run_manybody(ctx);
  if (e == "converge") return run_converge(ctx);
  if (e == "hierarchy") return run_hierarchy(ctx);
  throw ConfigError({"unknown experiment '" + e + "'"});
}

void record_error(RunManifest& m, const char* kind, const std::string& message, int code) {
  m.error_kind = kind;
  m.error_message = message;
  m.exit_code = code;
}

void write_manifest(RunManifest& m, const RunOptions& opts) {
  m.finished = utc_now();
  try {
    std::filesystem::create_directories(opts.out_dir);
    write_text(opts.out_dir / "manifest.json", m.to_json());
  } catch (const std::exception& e) {
    if (m.exit_code == exit_success || m.error_kind.empty())
      record_error(m, "io_error", std::string("cannot write manifest: ") + e.what(), exit_io);
  }
}

} // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["started"] = started;
  j["finished"] = finished;
  j["outputs"] = outputs;
  j["checks"] = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    all = all && c.passed;
  }
  j["checks_passed"] = all;
  nlohmann::ordered_json r = nlohmann::ordered_json::object();
  for (const auto& [k, v] : results) {
    if (std::isfinite(v))
      r[k] = v;
    else
      r[k] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  }
  j["results"] = r;
  if (error_kind.empty())
    j["error"] = nullptr;
  else
    j["error"] = {{"kind", error_kind}, {"message", error_message}};
  j["exit_code"] = exit_code;
  return j.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts) {
  RunManifest m;
  m.experiment = cfg.experiment;
  m.started = utc_now();
  const std::string resolved = cfg.resolved_text();
  m.config_hash = fnv1a_hex(resolved);
  try {
    std::filesystem::create_directories(opts.out_dir);
    write_text(opts.out_dir / "resolved_config.ini", resolved);
    m.outputs.push_back("resolved_config.ini");
    Context ctx{cfg, opts, m};
    dispatch(ctx);
    for (const auto& c : m.checks)
      if (!c.passed) record_error(m, "check_failed", "invariant check '" + c.name + "' failed: " + c.detail, exit_numerical);
  } catch (const ConfigError& e) {
    record_error(m, "config_error", e.what(), exit_config);
  } catch (const std::invalid_argument& e) {
    record_error(m, "config_error", e.what(), exit_config);
  } catch (const IoError& e) {
    record_error(m, "io_error", e.what(), exit_io);
  } catch (const std::filesystem::filesystem_error& e) {
    record_error(m, "io_error", e.what(), exit_io);
  } catch (const NumericalAbort& e) {
    record_error(m, "numerical_abort", e.what(), exit_numerical);
  } catch (const std::exception& e) {
    record_error(m, "numerical_abort", e.what(), exit_numerical);
  }
  write_manifest(m, opts);
  return m;
}

RunManifest run_file(const std::string& experiment, const std::filesystem::path& config_path, const RunOptions& opts) {
  RunManifest m;
  m.experiment = experiment;
  m.started = utc_now();
  std::string text;
  try {
    text = read_text(config_path);
  } catch (const IoError& e) {
    record_error(m, "io_error", e.what(), exit_io);
    write_manifest(m, opts);
    return m;
  }
  m.config_hash = fnv1a_hex(text);
  try {
    const ExperimentConfig cfg = parse_config(text, experiment);
    return run(cfg, opts);
  } catch (const ConfigError& e) {
    record_error(m, "config_error", e.what(), exit_config);
  }
  write_manifest(m, opts);
  return m;
}

} // namespace effdyn
