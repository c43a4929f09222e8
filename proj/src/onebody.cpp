#include "effdyn/onebody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace effdyn {

namespace {

constexpr Complex I{0.0, 1.0};

double max_dispersion(const GridSpec& g, Dispersion d) {
  return dispersion_multiplier(d).value(g.max_frequency_squared());
}

void require_normalized(const Field& phi) {
  const double n = l2_norm(phi);
  if (std::abs(n - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "field must be normalized to 1e-8, got norm " << n;
    throw std::invalid_argument(msg.str());
  }
}

} // namespace

Multiplier dispersion_multiplier(Dispersion d) {
  return d == Dispersion::laplacian ? Multiplier::laplacian() : Multiplier::semirelativistic();
}

TrapSpec::TrapSpec(Eigen::ArrayXd samples) : v_ext(std::move(samples)) {
  if (!v_ext.allFinite()) throw std::invalid_argument("trap samples must be finite");
}

TrapSpec TrapSpec::harmonic(const GridSpec& g, double curvature) {
  if (!(curvature >= 0.0)) throw std::invalid_argument("trap curvature must be non-negative");
  Eigen::ArrayXd v(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    v[i] = curvature * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  }
  return TrapSpec(std::move(v));
}

EvolutionModel EvolutionModel::linear(Dispersion d) {
  EvolutionModel m;
  m.dispersion = d;
  return m;
}

EvolutionModel EvolutionModel::hartree(double kappa, KernelSpec kernel, Dispersion d) {
  EvolutionModel m;
  m.interaction = Hartree{kappa, std::move(kernel)};
  m.dispersion = d;
  return m;
}

EvolutionModel EvolutionModel::sr_hartree(double lambda, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("regularization alpha must be non-negative");
  EvolutionModel m;
  m.interaction = SrHartree{lambda, alpha};
  m.dispersion = Dispersion::semirelativistic;
  return m;
}

EvolutionModel EvolutionModel::gp(double coefficient) {
  EvolutionModel m;
  m.interaction = GrossPitaevskii{coefficient};
  return m;
}

EvolutionModel EvolutionModel::gp_from_scattering_length(double a0) {
  if (!(a0 >= 0.0)) throw std::invalid_argument("scattering length of a repulsive potential is >= 0");
  return gp(8.0 * std::numbers::pi * a0);
}

EvolutionModel EvolutionModel::with_trap(TrapSpec t) const {
  EvolutionModel m = *this;
  m.trap = std::move(t);
  return m;
}

std::string EvolutionModel::describe() const {
  std::ostringstream s;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Linear>) s << "linear";
        else if constexpr (std::is_same_v<T, Hartree>) s << "hartree(kappa=" << v.kappa << ")";
        else if constexpr (std::is_same_v<T, SrHartree>)
          s << "sr_hartree(lambda=" << v.lambda << ", alpha=" << v.alpha << ")";
        else s << "gp(coefficient=" << v.coefficient << ")";
      },
      interaction);
  s << (dispersion == Dispersion::laplacian ? " laplacian" : " semirelativistic");
  if (trap) s << " trapped";
  return s.str();
}

void check_phase_wrap_guard(const GridSpec& g, Dispersion d, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  const double product = dt * max_dispersion(g, d);
  if (!(product < std::numbers::pi)) {
    std::ostringstream msg;
    msg << "phase-wrap guard violated: dt * max dispersion multiplier = " << product
        << " must stay below pi";
    throw std::invalid_argument(msg.str());
  }
}

SplitStepper::SplitStepper(const GridSpec& g, EvolutionModel model, StepperConfig cfg)
    : grid_(g), model_(std::move(model)), cfg_(cfg) {
  check_phase_wrap_guard(g, model_.dispersion, cfg_.dt);
  if (cfg_.steps_per_output < 1) throw std::invalid_argument("steps_per_output must be >= 1");
  dispersion_ = dispersion_multiplier(model_.dispersion).samples(g);
  half_phase_ = (-0.5 * I * cfg_.dt * dispersion_.cast<Complex>()).exp();
  if (model_.trap && model_.trap->v_ext.size() != g.size())
    throw std::invalid_argument("trap samples do not match grid");
  if (const auto* h = std::get_if<EvolutionModel::Hartree>(&model_.interaction)) {
    if (!(h->kernel.grid() == g)) throw std::invalid_argument("hartree kernel grid does not match field grid");
    kernel_ = h->kernel;
  } else if (const auto* s = std::get_if<EvolutionModel::SrHartree>(&model_.interaction)) {
    kernel_ = KernelSpec::regularized_coulomb(g, s->alpha);
  }
}

Eigen::ArrayXd SplitStepper::effective_potential(const Field& phi) const {
  const Eigen::ArrayXd rho = density(phi);
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(grid_.size());
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EvolutionModel::Hartree>)
          w = v.kappa * convolve(RealField(grid_, rho), *kernel_).values;
        else if constexpr (std::is_same_v<T, EvolutionModel::SrHartree>)
          w = -v.lambda * convolve(RealField(grid_, rho), *kernel_).values;
        else if constexpr (std::is_same_v<T, EvolutionModel::GrossPitaevskii>)
          w = v.coefficient * rho;
      },
      model_.interaction);
  if (model_.trap) w += model_.trap->v_ext;
  return w;
}

Field SplitStepper::step(const Field& phi) const {
  if (!(phi.grid == grid_)) throw std::invalid_argument("field grid does not match stepper grid");
  Field half = apply_spectral_factors(phi, half_phase_);
  const Eigen::ArrayXd w = effective_potential(half);
  half.values.array() *= (-I * cfg_.dt * w.cast<Complex>()).exp();
  Field out = apply_spectral_factors(half, half_phase_);
  if (!out.values.allFinite()) throw EvolutionAbort("non-finite amplitudes after split step", phi, 0.0);
  return out;
}

Field SplitStepper::imaginary_step(const Field& phi, double dtau) const {
  const Eigen::ArrayXcd decay = (-0.5 * dtau * dispersion_).exp().cast<Complex>();
  Field half = apply_spectral_factors(phi, decay);
  const Eigen::ArrayXd w = effective_potential(half);
  half.values.array() *= (-dtau * w).exp().cast<Complex>();
  return apply_spectral_factors(half, decay);
}

double SplitStepper::energy(const Field& phi) const {
  const SpectralField spectrum = transform_forward(phi);
  const double weight = grid_.cell_volume();
  const double kinetic = weight * (dispersion_ * spectrum.values.array().abs2()).sum();
  const Eigen::ArrayXd rho = density(phi);
  double potential = 0.0;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EvolutionModel::Hartree>)
          potential = 0.5 * v.kappa * weight * (convolve(RealField(grid_, rho), *kernel_).values * rho).sum();
        else if constexpr (std::is_same_v<T, EvolutionModel::SrHartree>)
          potential = -0.5 * v.lambda * weight * (convolve(RealField(grid_, rho), *kernel_).values * rho).sum();
        else if constexpr (std::is_same_v<T, EvolutionModel::GrossPitaevskii>)
          potential = 0.5 * v.coefficient * weight * (rho * rho).sum();
      },
      model_.interaction);
  if (model_.trap) potential += weight * (model_.trap->v_ext * rho).sum();
  return kinetic + potential;
}

Field evolve_step(const Field& phi, const EvolutionModel& model, const StepperConfig& cfg) {
  require_normalized(phi);
  return SplitStepper(phi.grid, model, cfg).step(phi);
}

double energy(const Field& phi, const EvolutionModel& model) {
  // The time step only matters for propagation; any guard-compliant value works.
  const double safe_dt = 1.0 / (1.0 + dispersion_multiplier(model.dispersion).value(phi.grid.max_frequency_squared()));
  return SplitStepper(phi.grid, model, {safe_dt, 1}).energy(phi);
}

EvolutionRun run_evolution(const Field& initial, const EvolutionModel& model,
                           const StepperConfig& cfg, int steps) {
  require_normalized(initial);
  if (steps < 0) throw std::invalid_argument("step count must be non-negative");
  const SplitStepper stepper(initial.grid, model, cfg);
  EvolutionRun run{initial, Series({"t", "mass", "energy", "h_half", "max_density"})};
  auto record = [&](int n) {
    const Field& f = run.final_state;
    run.series.add_row({n * cfg.dt, l2_norm(f) * l2_norm(f), stepper.energy(f),
                        norm(f, NormKind::h_half), density(f).maxCoeff()});
  };
  record(0);
  for (int n = 1; n <= steps; ++n) {
    try {
      run.final_state = stepper.step(run.final_state);
    } catch (const EvolutionAbort& e) {
      throw EvolutionAbort(e.what(), e.last_finite_state, (n - 1) * cfg.dt);
    }
    if (n % cfg.steps_per_output == 0 || n == steps) record(n);
  }
  return run;
}

GroundState minimize_imaginary_time(const EvolutionModel& model, const Field& initial,
                                    const ImaginaryTimeConfig& cfg) {
  require_normalized(initial);
  const bool gp = std::holds_alternative<EvolutionModel::GrossPitaevskii>(model.interaction);
  if (!model.trap && !gp)
    throw std::invalid_argument("imaginary-time minimization needs a trap or a GP model");
  if (!(cfg.dtau > 0.0) || !(cfg.tolerance > 0.0))
    throw std::invalid_argument("imaginary-time step and tolerance must be positive");

  const double safe_dt = 1.0 / (1.0 + dispersion_multiplier(model.dispersion).value(initial.grid.max_frequency_squared()));
  const SplitStepper stepper(initial.grid, model, {safe_dt, 1});
  GroundState gs{initial, stepper.energy(initial), {}, 0, false};
  gs.energy_history.push_back(gs.energy);
  double dtau = cfg.dtau;
  int rejections = 0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Field next = normalized(stepper.imaginary_step(gs.state, dtau));
    if (!next.values.allFinite()) throw NumericalAbort("imaginary-time iteration produced non-finite values");
    const double e = stepper.energy(next);
    // A rise means the splitting bias dominates the remaining descent: reject
    // the step and halve dtau.
    if (e > gs.energy + 1e-14 * std::max(1.0, std::abs(gs.energy))) {
      if (++rejections >= 3)
        throw NumericalAbort("imaginary-time energy increased for 3 consecutive steps; reduce dtau");
      dtau *= 0.5;
      continue;
    }
    rejections = 0;
    const double decrease = gs.energy - e;
    gs.state = std::move(next);
    gs.energy = e;
    gs.iterations = it;
    gs.energy_history.push_back(e);
    if (decrease < cfg.tolerance) {
      gs.converged = true;
      break;
    }
  }
  return gs;
}

CriticalEstimate estimate_critical_coupling(const Field& trial, const std::vector<double>& mu_grid,
                                            const std::vector<double>& lambda_grid) {
  const GridSpec& g = trial.grid;
  if (g.dimension() != 3) throw std::invalid_argument("critical coupling scan needs a 3D trial state");
  require_normalized(trial);
  if (mu_grid.size() < 2 || lambda_grid.empty()) throw std::invalid_argument("empty scan grid");
  if (!std::is_sorted(mu_grid.begin(), mu_grid.end()) || !std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
    throw std::invalid_argument("scan grids must be ascending");

  const Eigen::ArrayXd rho = density(trial);
  const double weight = g.cell_volume();
  std::array<double, 3> centre{0, 0, 0};
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    for (int a = 0; a < 3; ++a) centre[a] += weight * rho[i] * x[a];
  }
  double second_moment = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) r2 += (x[a] - centre[a]) * (x[a] - centre[a]);
    second_moment += weight * rho[i] * r2;
  }
  const double rms = std::sqrt(second_moment);
  const double mu_top = mu_grid.back();
  if (!(mu_grid.front() > 0.0)) throw std::invalid_argument("mu values must be positive");
  if (mu_top * g.spacing() > 0.5 * rms) {
    std::ostringstream msg;
    msg << "mu = " << mu_top << " exceeds grid resolution: rescaled rms radius " << rms / mu_top
        << " is below two grid spacings (" << 2.0 * g.spacing() << ")";
    throw std::invalid_argument(msg.str());
  }
  const double decade_start = mu_top / 10.0;
  if (mu_grid.front() > decade_start) throw std::invalid_argument("mu grid must span at least one decade");
  const auto first_top = static_cast<size_t>(
      std::lower_bound(mu_grid.begin(), mu_grid.end(), decade_start) - mu_grid.begin());
  if (mu_grid.size() - first_top < 2) throw std::invalid_argument("mu grid needs two points in its top decade");

  const Eigen::ArrayXd power = transform_forward(trial).values.array().abs2();
  const Eigen::ArrayXd xi2 = g.frequency_squared();
  const KernelSpec coulomb = KernelSpec::regularized_coulomb(g, 0.0);
  const double pair = weight * (convolve(RealField(g, rho), coulomb).values * rho).sum();

  std::vector<double> kinetic;
  for (double mu : mu_grid) kinetic.push_back(weight * ((1.0 + mu * mu * xi2).sqrt() * power).sum());

  CriticalEstimate est;
  est.trial_family = "phi_mu(x) = mu^{3/2} trial(mu x), trial rms radius " + std::to_string(rms);
  est.mu_grid = mu_grid;
  est.lambda_grid = lambda_grid;
  est.lower = -std::numeric_limits<double>::infinity();
  est.upper = std::numeric_limits<double>::infinity();
  for (double lambda : lambda_grid) {
    std::vector<double> e;
    for (size_t m = 0; m < mu_grid.size(); ++m) e.push_back(kinetic[m] - 0.5 * lambda * mu_grid[m] * pair);
    const bool non_negative = std::all_of(e.begin(), e.end(), [](double v) { return v >= 0.0; });
    bool decreasing = e.back() < 0.0;
    for (size_t m = first_top + 1; m < e.size() && decreasing; ++m) decreasing = e[m] < e[m - 1];
    if (non_negative) est.lower = std::max(est.lower, lambda);
    if (decreasing) est.upper = std::min(est.upper, lambda);
    est.energies.push_back(std::move(e));
  }
  return est;
}

BlowupVerdict monitor_blowup(const std::vector<double>& times, const std::vector<double>& h_half,
                             double threshold, int window) {
  if (times.size() != h_half.size()) throw std::invalid_argument("time and norm series differ in length");
  if (window < 1) throw std::invalid_argument("blow-up window must be >= 1");
  BlowupVerdict v;
  v.h_half_series = h_half;
  for (size_t i = static_cast<size_t>(window); i < h_half.size(); ++i) {
    if (!(h_half[i] > threshold)) continue;
    bool rising = true;
    for (size_t j = i - window + 1; j <= i && rising; ++j) rising = h_half[j] > h_half[j - 1];
    if (rising) {
      v.blew_up = true;
      v.detection_time = times[i];
      break;
    }
  }
  return v;
}

double regularization_alpha(int n_particles, double beta) {
  if (n_particles < 1) throw std::invalid_argument("particle number must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("regularization exponent beta must be positive");
  return std::pow(static_cast<double>(n_particles), -beta);
}

Field gaussian_field(const GridSpec& g, double width, std::array<double, 3> center,
                     std::array<double, 3> momentum) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian width must be positive");
  const int d = g.dimension();
  const double amplitude = std::pow(std::numbers::pi * width * width, -0.25 * d);
  return Field::from_function(g, [&](const std::array<double, 3>& x) {
    double r2 = 0.0, phase = 0.0;
    for (int a = 0; a < d; ++a) {
      r2 += (x[a] - center[a]) * (x[a] - center[a]);
      phase += momentum[a] * x[a];
    }
    return amplitude * std::exp(-0.5 * r2 / (width * width)) * std::exp(I * phase);
  });
}

Field normalized(const Field& f) {
  const double n = l2_norm(f);
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize a zero field");
  return Field(f.grid, f.values / n);
}

} // namespace effdyn
