#pragma once

#include "effdyn/csv.hpp"
#include "effdyn/errors.hpp"
#include "effdyn/grid.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace effdyn {

enum class Dispersion { laplacian, semirelativistic };

Multiplier dispersion_multiplier(Dispersion d);

/// External potential sampled on a grid.
struct TrapSpec {
  Eigen::ArrayXd v_ext;

  explicit TrapSpec(Eigen::ArrayXd samples);
  /// curvature * |x|^2; ground state energy of -Laplacian + trap is d * sqrt(curvature).
  static TrapSpec harmonic(const GridSpec& g, double curvature);
};

/// Which effective equation drives phi_t, and with which coupling.
struct EvolutionModel {
  struct Linear {};
  /// W = kappa (V * |phi|^2)
  struct Hartree {
    double kappa;
    KernelSpec kernel;
  };
  /// W = -lambda ((1 / (|.| + alpha)) * |phi|^2)
  struct SrHartree {
    double lambda;
    double alpha;
  };
  /// W = coefficient |phi|^2; the energy functional uses coefficient / 2.
  struct GrossPitaevskii {
    double coefficient;
  };
  using Interaction = std::variant<Linear, Hartree, SrHartree, GrossPitaevskii>;

  Interaction interaction = Linear{};
  Dispersion dispersion = Dispersion::laplacian;
  std::optional<TrapSpec> trap;

  static EvolutionModel linear(Dispersion d = Dispersion::laplacian);
  static EvolutionModel hartree(double kappa, KernelSpec kernel, Dispersion d = Dispersion::laplacian);
  static EvolutionModel sr_hartree(double lambda, double alpha);
  static EvolutionModel gp(double coefficient);
  /// GP model with evolution coefficient 8 pi a0.
  static EvolutionModel gp_from_scattering_length(double a0);

  EvolutionModel with_trap(TrapSpec t) const;
  std::string describe() const;
};

struct StepperConfig {
  double dt = 1e-3;
  int steps_per_output = 1;
};

/// Thrown when a step produces non-finite amplitudes; carries the last finite state.
class EvolutionAbort : public NumericalAbort {
public:
  EvolutionAbort(const std::string& what, Field last_finite, double time)
      : NumericalAbort(what), last_finite_state(std::move(last_finite)), time(time) {}

  Field last_finite_state;
  double time;
};

/// Strang split-step propagator bound to one grid and model. Precomputes the
/// half-step dispersion phases and the interaction kernel.
class SplitStepper {
public:
  SplitStepper(const GridSpec& g, EvolutionModel model, StepperConfig cfg);

  const GridSpec& grid() const { return grid_; }
  const EvolutionModel& model() const { return model_; }
  const StepperConfig& config() const { return cfg_; }

  /// Instantaneous effective potential W[|phi|^2] including the trap.
  Eigen::ArrayXd effective_potential(const Field& phi) const;
  /// One real-time step; throws EvolutionAbort on non-finite output.
  Field step(const Field& phi) const;
  /// One imaginary-time step (not renormalized).
  Field imaginary_step(const Field& phi, double dtau) const;
  double energy(const Field& phi) const;

private:
  GridSpec grid_;
  EvolutionModel model_;
  StepperConfig cfg_;
  Eigen::ArrayXd dispersion_;
  Eigen::ArrayXcd half_phase_;
  std::optional<KernelSpec> kernel_;
};

/// Checks dt * max dispersion multiplier < pi; throws std::invalid_argument naming the guard.
void check_phase_wrap_guard(const GridSpec& g, Dispersion d, double dt);

Field evolve_step(const Field& phi, const EvolutionModel& model, const StepperConfig& cfg);
double energy(const Field& phi, const EvolutionModel& model);

struct EvolutionRun {
  Field final_state;
  /// Columns t, mass, energy, h_half, max_density.
  Series series;
};

/// Advances `steps` steps, sampling the series every cfg.steps_per_output steps
/// (and at t = 0).
EvolutionRun run_evolution(const Field& initial, const EvolutionModel& model,
                           const StepperConfig& cfg, int steps);

struct ImaginaryTimeConfig {
  double dtau = 1e-2;
  double tolerance = 1e-12;
  int max_iterations = 100000;
};

struct GroundState {
  Field state;
  double energy;
  std::vector<double> energy_history;
  int iterations;
  bool converged;
};

/// Normalized gradient flow. A step that raises the energy is rejected and
/// dtau halved, so the accepted energies never increase; three consecutive
/// rejections abort.
GroundState minimize_imaginary_time(const EvolutionModel& model, const Field& initial,
                                    const ImaginaryTimeConfig& cfg);

struct CriticalEstimate {
  double lower;
  double upper;
  std::string trial_family;
  std::vector<double> mu_grid;
  std::vector<double> lambda_grid;
  /// energies[l][m] = E_lambda(phi_mu).
  std::vector<std::vector<double>> energies;
};

/// Scans E(phi_mu) for phi_mu(x) = mu^{3/2} trial(mu x) over mu_grid and each
/// lambda. lower: largest lambda with E >= 0 on the whole family. upper:
/// smallest lambda whose energy decreases strictly over the top decade of
/// mu_grid and is negative at its end.
CriticalEstimate estimate_critical_coupling(const Field& trial, const std::vector<double>& mu_grid,
                                            const std::vector<double>& lambda_grid);

struct BlowupVerdict {
  bool blew_up = false;
  std::optional<double> detection_time;
  std::vector<double> h_half_series;
};

/// First sample exceeding threshold after `window` strictly increasing samples.
BlowupVerdict monitor_blowup(const std::vector<double>& times, const std::vector<double>& h_half,
                             double threshold, int window);

/// alpha(N) = N^{-beta}.
double regularization_alpha(int n_particles, double beta);

/// Normalized Gaussian (pi s^2)^{-d/4} exp(-|x - x0|^2 / (2 s^2) + i k0 . x).
Field gaussian_field(const GridSpec& g, double width, std::array<double, 3> center = {0, 0, 0},
                     std::array<double, 3> momentum = {0, 0, 0});
Field normalized(const Field& f);

} // namespace effdyn
