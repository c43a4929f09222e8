#pragma once

#include "effdyn/csv.hpp"
#include "effdyn/density.hpp"
#include "effdyn/lattice.hpp"
#include "effdyn/onebody.hpp"

#include <string>
#include <vector>

namespace effdyn {

/// Grid with one point per lattice site (n = M, L = M * spacing).
GridSpec lattice_grid(int sites, double spacing);
/// Lattice orbital (sum |psi_i|^2 = 1) <-> grid field (h sum |phi_i|^2 = 1).
Field orbital_to_field(const Eigen::VectorXcd& orbital, double spacing);
Eigen::VectorXcd field_to_orbital(const Field& f);

/// Hartree equation matching a mean-field lattice model: same dispersion,
/// effective potential kappa (v * |phi|^2) with v sampled on the lattice.
EvolutionModel lattice_hartree_model(const LatticeModel& model);

struct MeanFieldStudyConfig {
  Eigen::VectorXcd orbital;
  double spacing = 1.0;
  Dispersion dispersion = Dispersion::laplacian;
  Eigen::VectorXd pair_potential;
  double kappa = 1.0;
  std::vector<int> n_list;
  double horizon = 1.0;
  /// Many-body Krylov step; the Hartree leg uses dt / hartree_substeps.
  double dt = 0.05;
  int hartree_substeps = 10;
  int samples = 4;
  int krylov_dim = 20;
  double krylov_tolerance = 1e-12;
  std::int64_t basis_cap = default_basis_cap;
  int threads = 1;
};

struct ConvergenceReport {
  std::vector<int> n_list;
  std::vector<double> times;
  /// distances(n, t): trace distance of gamma^(1)_N(t) to |phi_t><phi_t|.
  Eigen::MatrixXd distances;
  Eigen::MatrixXd energy_distances;
  /// OLS slope of log distance against log N per time; NaN where undefined.
  std::vector<double> fitted_slope;
  /// RMS residual of each fit.
  std::vector<double> fit_quality;
  double max_local_error = 0.0;
  bool complete = true;
  std::vector<std::string> diagnostics;

  /// Columns t, then eps_N<n> and energy_N<n> for each N, then slope and fit_rms.
  Series to_series() const;
  std::string summary() const;
};

/// Ordinary least squares fit y = a + b x; returns {b, rms residual}.
std::pair<double, double> least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Propagates product data under the mean-field lattice Hamiltonian for each N
/// and compares gamma^(1) with the lattice Hartree solution. Legs that exceed
/// the basis cap or abort are recorded as NaN and mark the report incomplete.
ConvergenceReport mean_field_study(const MeanFieldStudyConfig& cfg);

struct HierarchyConfig {
  Field initial;
  /// Coefficient c of the cubic equation i phi' = -Laplacian phi + c |phi|^2 phi.
  double evolution_coefficient = 0.0;
  /// Coefficient placed in front of the collision term of the hierarchy.
  double residual_coefficient = 0.0;
  std::vector<int> k_list{1};
  /// Time at which the centered difference is evaluated.
  double time = 0.5;
  std::vector<double> dts{0.02, 0.01, 0.005};
  Eigen::Index tensor_cap = 1024;
};

struct HierarchyResidualReport {
  std::vector<int> k_list;
  std::vector<double> dts;
  /// residual(k index, dt index): Frobenius norm of the hierarchy defect.
  Eigen::MatrixXd residual;
  double coefficient_used = 0.0;
  double evolution_coefficient = 0.0;
  /// Predicted dt -> 0 limit |residual_coefficient - evolution_coefficient| * ||collision||.
  Eigen::VectorXd mismatch_prediction;

  /// Columns k, dt, residual.
  Series to_series() const;
};

/// Builds gamma_k = |phi_t><phi_t|^{otimes k} at t - dt, t, t + dt along the
/// split-step solution and evaluates the infinite hierarchy with the on-site
/// contact kernel (1 / h on the diagonal). The collision trace is contracted
/// using the factorized form of gamma_{k+1}.
HierarchyResidualReport hierarchy_residual_factorized(const HierarchyConfig& cfg);

/// g(r) = sum_x gamma_2(x, x+r; x, x+r) / sum_x rho(x) rho(x+r), r = 0..M-1.
Eigen::VectorXd pair_correlation(const ReducedDensity& gamma2);

} // namespace effdyn
