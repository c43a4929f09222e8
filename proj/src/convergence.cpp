#include "effdyn/convergence.hpp"
#include "effdyn/errors.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace effdyn {

GridSpec lattice_grid(int sites, double spacing) { return GridSpec(1, sites, sites * spacing); }

Field orbital_to_field(const Eigen::VectorXcd& orbital, double spacing) {
  const GridSpec g = lattice_grid(static_cast<int>(orbital.size()), spacing);
  return Field(g, orbital / std::sqrt(spacing));
}

Eigen::VectorXcd field_to_orbital(const Field& f) {
  if (f.grid.dimension() != 1) throw std::invalid_argument("lattice orbitals live on 1D grids");
  return f.values * std::sqrt(f.grid.spacing());
}

EvolutionModel lattice_hartree_model(const LatticeModel& model) {
  model.validate();
  if (model.coupling_rule != CouplingRule::mean_field)
    throw std::invalid_argument("the Hartree limit is defined for mean-field coupling");
  const GridSpec g = lattice_grid(model.sites, model.spacing);
  const Eigen::MatrixXcd dispersion = lattice_multiplier_matrix(model.sites, model.spacing,
                                                                dispersion_multiplier(model.dispersion));
  const Eigen::MatrixXcd rest = model.one_body - dispersion;
  Eigen::MatrixXcd off = rest;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 1e-12 || rest.diagonal().imag().cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("one-body matrix is not the dispersion plus a real diagonal trap");
  EvolutionModel out =
      EvolutionModel::hartree(model.coupling, KernelSpec::from_samples(g, model.pair_potential.array()), model.dispersion);
  const Eigen::ArrayXd trap = rest.diagonal().real().array();
  if ((trap != 0.0).any()) out = out.with_trap(TrapSpec(trap));
  return out;
}

std::pair<double, double> least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope fit needs distinct abscissae");
  const double b = sxy / sxx;
  const double a = my - b * mx;
  double ss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - a - b * x[i], 2);
  return {b, std::sqrt(ss / n)};
}

Series ConvergenceReport::to_series() const {
  std::vector<std::string> cols{"t"};
  for (int n : n_list) cols.push_back("eps_N" + std::to_string(n));
  for (int n : n_list) cols.push_back("energy_N" + std::to_string(n));
  cols.push_back("slope");
  cols.push_back("fit_rms");
  Series s(cols);
  for (size_t t = 0; t < times.size(); ++t) {
    std::vector<double> row{times[t]};
    for (size_t n = 0; n < n_list.size(); ++n) row.push_back(distances(n, t));
    for (size_t n = 0; n < n_list.size(); ++n) row.push_back(energy_distances(n, t));
    row.push_back(fitted_slope[t]);
    row.push_back(fit_quality[t]);
    s.add_row(std::move(row));
  }
  return s;
}

std::string ConvergenceReport::summary() const {
  std::ostringstream out;
  out << "mean-field study: " << (complete ? "complete" : "INCOMPLETE") << "\n";
  out << "N:";
  for (int n : n_list) out << " " << n;
  out << "\nmax Krylov local error: " << max_local_error << "\n";
  for (size_t t = 0; t < times.size(); ++t)
    out << "t=" << format_double(times[t]) << " slope=" << format_double(fitted_slope[t])
        << " rms=" << format_double(fit_quality[t]) << "\n";
  for (const auto& d : diagnostics) out << "note: " << d << "\n";
  return out.str();
}

ConvergenceReport mean_field_study(const MeanFieldStudyConfig& cfg) {
  const int m = static_cast<int>(cfg.orbital.size());
  if (m < 1) throw std::invalid_argument("mean-field study needs a lattice orbital");
  if (std::abs(cfg.orbital.norm() - 1.0) > 1e-10) throw std::invalid_argument("lattice orbital must be normalized");
  if (cfg.pair_potential.size() != m) throw std::invalid_argument("pair potential must have M entries");
  if (cfg.n_list.empty()) throw std::invalid_argument("N_list must not be empty");
  if (!(cfg.horizon >= 0.0) || !(cfg.dt > 0.0) || cfg.samples < 1 || cfg.hartree_substeps < 1)
    throw std::invalid_argument("study needs horizon >= 0, dt > 0, samples >= 1, hartree_substeps >= 1");
  for (int n : cfg.n_list)
    if (n < 1) throw std::invalid_argument("every N must be at least 1");

  ConvergenceReport report;
  report.n_list = cfg.n_list;
  const int nt = cfg.samples + 1;
  for (int i = 0; i < nt; ++i) report.times.push_back(cfg.horizon * i / cfg.samples);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.distances = Eigen::MatrixXd::Constant(cfg.n_list.size(), nt, nan);
  report.energy_distances = report.distances;

  // The Hartree leg does not depend on N: solve it once on the same lattice.
  const LatticeModel reference = LatticeModel::make(m, cfg.n_list.front(), cfg.spacing, cfg.dispersion,
                                                    cfg.pair_potential, CouplingRule::mean_field, cfg.kappa);
  const EvolutionModel hartree = lattice_hartree_model(reference);
  const double interval = cfg.horizon / cfg.samples;
  const int micro = std::max(1, static_cast<int>(std::ceil(interval / cfg.dt - 1e-9))) * cfg.hartree_substeps;
  const SplitStepper stepper(lattice_grid(m, cfg.spacing), hartree, StepperConfig{interval / micro, 1});
  std::vector<Eigen::VectorXcd> hartree_orbitals;
  Field phi = orbital_to_field(cfg.orbital, cfg.spacing);
  hartree_orbitals.push_back(cfg.orbital);
  for (int i = 1; i < nt; ++i) {
    for (int s = 0; s < micro; ++s) phi = stepper.step(phi);
    hartree_orbitals.push_back(field_to_orbital(phi));
  }

  for (size_t leg = 0; leg < cfg.n_list.size(); ++leg) {
    const int n = cfg.n_list[leg];
    const std::int64_t dim = SymmetricBasis::dimension_for(n, m, cfg.basis_cap);
    if (dim > cfg.basis_cap) {
      report.complete = false;
      report.diagnostics.push_back("N=" + std::to_string(n) + ", M=" + std::to_string(m) +
                                   ": basis dimension C(" + std::to_string(n + m - 1) + ", " + std::to_string(n) +
                                   ") exceeds cap " + std::to_string(cfg.basis_cap));
      continue;
    }
    try {
      auto basis = std::make_shared<const SymmetricBasis>(n, m, cfg.basis_cap);
      const LatticeModel model = LatticeModel::make(m, n, cfg.spacing, cfg.dispersion, cfg.pair_potential,
                                                    CouplingRule::mean_field, cfg.kappa);
      const LatticeHamiltonian h(basis, model, cfg.threads);
      const KrylovPropagator prop(h, KrylovConfig{cfg.dt, cfg.krylov_dim, cfg.krylov_tolerance});
      ManyBodyState state = product_state(cfg.orbital, basis);
      PropagationReport pr;
      for (int i = 0; i < nt; ++i) {
        if (i > 0) state.amplitudes = prop.advance(state.amplitudes, interval, &pr);
        const ReducedDensity g1 = reduce(state, 1, cfg.spacing);
        const ReducedDensity target = factorized_density(hartree_orbitals[i], 1, cfg.spacing);
        report.distances(leg, i) = trace_distance(g1, target);
        report.energy_distances(leg, i) = energy_norm_distance(g1, hartree_orbitals[i]);
      }
      report.max_local_error = std::max(report.max_local_error, pr.max_local_error);
    } catch (const NumericalAbort& e) {
      report.complete = false;
      report.diagnostics.push_back("N=" + std::to_string(n) + ": " + e.what());
    }
  }

  for (int i = 0; i < nt; ++i) {
    std::vector<double> x, y;
    bool defined = true;
    for (size_t leg = 0; leg < cfg.n_list.size(); ++leg) {
      const double d = report.distances(leg, i);
      if (!(d > 0.0)) {
        defined = false;
        break;
      }
      x.push_back(std::log(static_cast<double>(cfg.n_list[leg])));
      y.push_back(std::log(d));
    }
    if (defined && x.size() >= 2) {
      const auto [slope, rms] = least_squares_slope(x, y);
      report.fitted_slope.push_back(slope);
      report.fit_quality.push_back(rms);
    } else {
      report.fitted_slope.push_back(nan);
      report.fit_quality.push_back(nan);
    }
  }
  return report;
}

namespace {

Eigen::VectorXcd tensor_power(const Eigen::VectorXcd& v, int k) {
  Eigen::VectorXcd t = v;
  for (int j = 1; j < k; ++j) {
    Eigen::VectorXcd next(t.size() * v.size());
    for (Eigen::Index a = 0; a < t.size(); ++a) next.segment(a * v.size(), v.size()) = t(a) * v;
    t = std::move(next);
  }
  return t;
}

/// sum over slots of f(x_j) for each tuple index.
Eigen::VectorXd slot_sum(const Eigen::VectorXd& f, int k) {
  const Eigen::Index p = f.size();
  Eigen::VectorXd out = f;
  for (int j = 1; j < k; ++j) {
    Eigen::VectorXd next(out.size() * p);
    for (Eigen::Index a = 0; a < out.size(); ++a) next.segment(a * p, p) = out(a) + f.array();
    out = std::move(next);
  }
  return out;
}

} // namespace

Series HierarchyResidualReport::to_series() const {
  Series s({"k", "dt", "residual"});
  for (size_t i = 0; i < k_list.size(); ++i)
    for (size_t j = 0; j < dts.size(); ++j) s.add_row({static_cast<double>(k_list[i]), dts[j], residual(i, j)});
  return s;
}

HierarchyResidualReport hierarchy_residual_factorized(const HierarchyConfig& cfg) {
  const GridSpec& g = cfg.initial.grid;
  if (g.dimension() != 1) throw std::invalid_argument("factorized hierarchy residual is evaluated on 1D grids");
  if (cfg.k_list.empty() || cfg.dts.empty()) throw std::invalid_argument("k_list and dts must not be empty");
  if (!(cfg.time > 0.0)) throw std::invalid_argument("evaluation time must be positive");
  const Eigen::Index p = g.size();
  for (int k : cfg.k_list) {
    if (k < 1) throw std::invalid_argument("hierarchy order k must be at least 1");
    Eigen::Index size = 1;
    for (int j = 0; j < k; ++j) size *= p;
    if (size > cfg.tensor_cap)
      throw std::invalid_argument("hierarchy order k=" + std::to_string(k) + " needs " + std::to_string(size) +
                                  " tuples, above the tensor cap " + std::to_string(cfg.tensor_cap));
  }

  HierarchyResidualReport report;
  report.k_list = cfg.k_list;
  report.dts = cfg.dts;
  report.coefficient_used = cfg.residual_coefficient;
  report.evolution_coefficient = cfg.evolution_coefficient;
  report.residual = Eigen::MatrixXd::Zero(cfg.k_list.size(), cfg.dts.size());
  report.mismatch_prediction = Eigen::VectorXd::Zero(cfg.k_list.size());

  const EvolutionModel model = EvolutionModel::gp(cfg.evolution_coefficient);
  const Eigen::MatrixXcd laplacian = lattice_multiplier_matrix(static_cast<int>(p), g.spacing(), Multiplier::laplacian());
  const bool zero_field = cfg.initial.values.cwiseAbs().maxCoeff() == 0.0;

  for (size_t j = 0; j < cfg.dts.size(); ++j) {
    const double dt = cfg.dts[j];
    if (!(dt > 0.0) || dt >= cfg.time) throw std::invalid_argument("every dt must lie in (0, time)");
    const int steps = static_cast<int>(std::lround(cfg.time / dt));
    if (std::abs(steps * dt - cfg.time) > 1e-9 * cfg.time)
      throw std::invalid_argument("evaluation time must be a multiple of every dt");

    Field before = cfg.initial, now = cfg.initial, after = cfg.initial;
    if (!zero_field) {
      const SplitStepper stepper(g, model, StepperConfig{dt, 1});
      Field phi = cfg.initial;
      for (int s = 0; s < steps - 1; ++s) phi = stepper.step(phi);
      before = phi;
      now = stepper.step(before);
      after = stepper.step(now);
    }

    for (size_t ki = 0; ki < cfg.k_list.size(); ++ki) {
      const int k = cfg.k_list[ki];
      const Eigen::VectorXcd b = tensor_power(before.values, k);
      const Eigen::VectorXcd c = tensor_power(now.values, k);
      const Eigen::VectorXcd a = tensor_power(after.values, k);
      // Kinetic part: sum_j L_j applied to the rank-one kernel.
      Eigen::VectorXcd lc = Eigen::VectorXcd::Zero(c.size());
      for (int slot = 0; slot < k; ++slot) lc += slot_operator(laplacian, slot, k) * c;
      // Contact collision: (|phi(x_j)|^2 - |phi(x'_j)|^2) gamma_k, summed over slots.
      const Eigen::VectorXd rho_sum = slot_sum(now.values.cwiseAbs2(), k);

      const Eigen::MatrixXcd gamma = c * c.adjoint();
      Eigen::MatrixXcd collision = gamma;
      for (Eigen::Index col = 0; col < gamma.cols(); ++col)
        for (Eigen::Index row = 0; row < gamma.rows(); ++row)
          collision(row, col) *= rho_sum(row) - rho_sum(col);
      const Eigen::MatrixXcd defect = Complex(0.0, 1.0) * (a * a.adjoint() - b * b.adjoint()) / (2.0 * dt) -
                                      (lc * c.adjoint() - c * lc.adjoint()) - cfg.residual_coefficient * collision;
      report.residual(ki, j) = defect.norm();
      if (j + 1 == cfg.dts.size())
        report.mismatch_prediction(ki) =
            std::abs(cfg.residual_coefficient - cfg.evolution_coefficient) * collision.norm();
    }
  }
  return report;
}

Eigen::VectorXd pair_correlation(const ReducedDensity& gamma2) {
  if (gamma2.k != 2) throw std::invalid_argument("pair correlation needs k = 2");
  const int m = gamma2.sites;
  if (gamma2.kernel.rows() != static_cast<Eigen::Index>(m) * m)
    throw std::invalid_argument("reduced density kernel must be M^2 x M^2");
  const ReducedDensity gamma1 = partial_trace_last(gamma2);
  Eigen::VectorXd g(m);
  for (int r = 0; r < m; ++r) {
    double pair = 0.0, product = 0.0;
    for (int x = 0; x < m; ++x) {
      const int y = (x + r) % m;
      const Eigen::Index idx = static_cast<Eigen::Index>(x) * m + y;
      pair += gamma2.kernel(idx, idx).real();
      product += gamma1.kernel(x, x).real() * gamma1.kernel(y, y).real();
    }
    g(r) = product > 0.0 ? pair / product : std::numeric_limits<double>::quiet_NaN();
  }
  return g;
}

} // namespace effdyn
