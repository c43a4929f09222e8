#include "effdyn/errors.hpp"
#include "effdyn/lattice.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace effdyn {

double LatticeModel::pair_strength() const {
  if (coupling_rule == CouplingRule::raw) return coupling;
  if (n_particles < 1) throw std::invalid_argument("mean-field coupling needs N >= 1");
  return coupling / n_particles;
}

Eigen::MatrixXcd lattice_multiplier_matrix(int sites, double spacing, const Multiplier& m) {
  const GridSpec g(1, sites, sites * spacing);
  const Eigen::ArrayXd values = m.samples(g);
  Eigen::MatrixXcd out(sites, sites);
  for (int i = 0; i < sites; ++i) {
    for (int j = 0; j < sites; ++j) {
      Complex acc = 0.0;
      for (int k = 0; k < sites; ++k)
        acc += values(k) * std::polar(1.0, g.frequency(k) * (i - j) * spacing);
      out(i, j) = acc / static_cast<double>(sites);
    }
  }
  return 0.5 * (out + out.adjoint());
}

Eigen::VectorXd lattice_pair_potential(int sites, double spacing, const std::function<double(double)>& v) {
  const GridSpec g(1, sites, sites * spacing);
  Eigen::VectorXd out(sites);
  for (int r = 0; r < sites; ++r) out(r) = v(std::abs(g.wrapped_displacement(r)));
  // The wrapped displacement of M/2 is -L/2 and its mirror is itself, so v is even.
  return out;
}

LatticeModel LatticeModel::make(int sites, int n_particles, double spacing, Dispersion d,
                                Eigen::VectorXd pair_potential, CouplingRule rule, double coupling,
                                std::optional<Eigen::VectorXd> trap) {
  LatticeModel model;
  model.sites = sites;
  model.n_particles = n_particles;
  model.spacing = spacing;
  model.dispersion = d;
  model.one_body = lattice_multiplier_matrix(sites, spacing, dispersion_multiplier(d));
  if (trap) {
    if (trap->size() != sites) throw std::invalid_argument("trap length differs from site count");
    model.one_body.diagonal() += trap->cast<Complex>();
  }
  model.pair_potential = std::move(pair_potential);
  model.coupling_rule = rule;
  model.coupling = coupling;
  model.validate();
  return model;
}

void LatticeModel::validate() const {
  if (sites < 1 || n_particles < 0) throw std::invalid_argument("lattice model needs M >= 1 and N >= 0");
  if (!(spacing > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
  if (one_body.rows() != sites || one_body.cols() != sites)
    throw std::invalid_argument("one-body matrix must be M x M");
  if (pair_potential.size() != sites) throw std::invalid_argument("pair potential must have M entries");
  if (!one_body.allFinite() || !pair_potential.allFinite() || !std::isfinite(coupling))
    throw std::invalid_argument("lattice model has non-finite entries");
  const double scale = std::max(1.0, one_body.cwiseAbs().maxCoeff());
  if ((one_body - one_body.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("one-body matrix is not hermitian");
  for (int r = 1; r < sites; ++r)
    if (std::abs(pair_potential(r) - pair_potential(sites - r)) > 1e-12 * std::max(1.0, std::abs(pair_potential(r))))
      throw std::invalid_argument("pair potential is not even on the periodic lattice");
}

namespace {

double diagonal_energy(std::span<const std::uint8_t> occ, const LatticeModel& model, double g) {
  const int m = model.sites;
  double kinetic = 0.0;
  double pair = 0.0;
  for (int i = 0; i < m; ++i) {
    if (occ[i] == 0) continue;
    kinetic += model.one_body(i, i).real() * occ[i];
    pair += model.pair_potential(0) * 0.5 * occ[i] * (occ[i] - 1.0);
    for (int j = i + 1; j < m; ++j)
      if (occ[j] != 0) pair += model.pair_potential(j - i) * occ[i] * occ[j];
  }
  return kinetic + g * pair;
}

} // namespace

LatticeHamiltonian::LatticeHamiltonian(std::shared_ptr<const SymmetricBasis> basis, const LatticeModel& model,
                                       int threads)
    : basis_(std::move(basis)), model_(model), threads_(std::max(1, threads)) {
  if (!basis_) throw std::invalid_argument("hamiltonian needs a basis");
  model_.validate();
  if (basis_->sites() != model_.sites || basis_->n_particles() != model_.n_particles)
    throw std::invalid_argument("basis (N=" + std::to_string(basis_->n_particles()) + ", M=" +
                                std::to_string(basis_->sites()) + ") does not match model (N=" +
                                std::to_string(model_.n_particles) + ", M=" + std::to_string(model_.sites) + ")");
  const int m = model_.sites;
  const double g = model_.n_particles > 0 ? model_.pair_strength() : 0.0;
  const Eigen::Index dim = basis_->dimension();

  // Gather form: row n couples to n - e_a + e_b through T(a, b) sqrt(n_a (n_b + 1)).
  std::vector<std::int64_t> counts(dim + 1, 0);
  auto row_entries = [&](Eigen::Index r, auto&& emit) {
    const auto occ = basis_->occupation(r);
    emit(r, Complex(diagonal_energy(occ, model_, g), 0.0));
    std::vector<std::uint8_t> target(occ.begin(), occ.end());
    for (int a = 0; a < m; ++a) {
      if (occ[a] == 0) continue;
      for (int b = 0; b < m; ++b) {
        if (b == a) continue;
        const Complex t = model_.one_body(a, b);
        if (t == Complex(0.0)) continue;
        --target[a];
        ++target[b];
        const Eigen::Index col = basis_->rank(target);
        ++target[a];
        --target[b];
        emit(col, t * std::sqrt(occ[a] * (occ[b] + 1.0)));
      }
    }
  };

  detail::parallel_chunks(dim, threads_, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t r = begin; r < end; ++r) {
      std::int64_t c = 0;
      row_entries(r, [&](Eigen::Index, Complex) { ++c; });
      counts[r + 1] = c;
    }
  });
  row_start_.assign(dim + 1, 0);
  for (Eigen::Index r = 0; r < dim; ++r) row_start_[r + 1] = row_start_[r] + counts[r + 1];
  cols_.resize(row_start_[dim]);
  vals_.resize(row_start_[dim]);
  detail::parallel_chunks(dim, threads_, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t r = begin; r < end; ++r) {
      std::int64_t pos = row_start_[r];
      row_entries(r, [&](Eigen::Index col, Complex v) {
        cols_[pos] = static_cast<std::int32_t>(col);
        vals_[pos] = v;
        ++pos;
      });
    }
  });
}

Eigen::VectorXcd LatticeHamiltonian::apply(const Eigen::VectorXcd& x) const {
  const Eigen::Index dim = dimension();
  if (x.size() != dim) throw std::invalid_argument("state dimension differs from basis dimension");
  Eigen::VectorXcd y(dim);
  detail::parallel_chunks(dim, threads_, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t r = begin; r < end; ++r) {
      Complex acc = 0.0;
      for (std::int64_t p = row_start_[r]; p < row_start_[r + 1]; ++p) acc += vals_[p] * x(cols_[p]);
      y(r) = acc;
    }
  });
  return y;
}

Eigen::MatrixXcd LatticeHamiltonian::dense() const {
  const Eigen::Index dim = dimension();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (std::int64_t p = row_start_[r]; p < row_start_[r + 1]; ++p) h(r, cols_[p]) += vals_[p];
  return h;
}

double LatticeHamiltonian::expectation(const Eigen::VectorXcd& x) const {
  return x.dot(apply(x)).real() / x.squaredNorm();
}

Eigen::VectorXcd apply_hamiltonian(const ManyBodyState& s, const LatticeModel& model) {
  if (!s.basis) throw std::invalid_argument("state has no basis");
  if (s.amplitudes.size() != s.basis->dimension())
    throw std::invalid_argument("amplitude vector length differs from basis dimension");
  return LatticeHamiltonian(s.basis, model).apply(s.amplitudes);
}

KrylovPropagator::KrylovPropagator(const LatticeHamiltonian& h, KrylovConfig cfg) : h_(h), cfg_(cfg) {
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("Krylov step dt must be positive");
  if (cfg_.krylov_dim < 1) throw std::invalid_argument("Krylov dimension must be at least 1");
  if (!(cfg_.tolerance > 0.0)) throw std::invalid_argument("Krylov tolerance must be positive");
}

Eigen::VectorXcd KrylovPropagator::step(const Eigen::VectorXcd& psi, double dt, double* local_error) const {
  const Eigen::Index dim = h_.dimension();
  if (psi.size() != dim) throw std::invalid_argument("state dimension differs from basis dimension");
  const double beta0 = psi.norm();
  if (local_error) *local_error = 0.0;
  if (beta0 == 0.0 || dt == 0.0) return psi;

  const int m = static_cast<int>(std::min<Eigen::Index>(cfg_.krylov_dim, dim));
  std::vector<Eigen::VectorXcd> v;
  v.reserve(m);
  v.push_back(psi / beta0);
  Eigen::VectorXd alpha(m), beta(m);
  double beta_last = 0.0;
  int used = m;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd w = h_.apply(v[j]);
    const double a = v[j].dot(w).real();
    w -= a * v[j];
    if (j > 0) w -= beta(j - 1) * v[j - 1];
    // Two passes of full reorthogonalization keep the basis orthonormal to roundoff.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= v[i].dot(w) * v[i];
    alpha(j) = a;
    const double b = w.norm();
    if (!std::isfinite(b)) throw NumericalAbort("Krylov recursion produced non-finite values");
    if (b <= 1e-12 * std::max(1.0, std::abs(a))) {
      // Invariant subspace found: the projected exponential is exact.
      used = j + 1;
      beta_last = 0.0;
      break;
    }
    if (j + 1 < m) {
      beta(j) = b;
      v.push_back(w / b);
    } else {
      beta_last = b;
    }
  }

  Eigen::VectorXd diag = alpha.head(used);
  Eigen::VectorXd sub = used > 1 ? Eigen::VectorXd(beta.head(used - 1)) : Eigen::VectorXd(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd& q = es.eigenvectors();
  Eigen::VectorXcd phases(used);
  for (int i = 0; i < used; ++i) phases(i) = std::polar(q(0, i), -dt * es.eigenvalues()(i));
  const Eigen::VectorXcd c = q.cast<Complex>() * phases;

  const double err = beta_last * std::abs(c(used - 1));
  if (local_error) *local_error = err;
  if (!(err <= cfg_.tolerance))
    throw NumericalAbort("Krylov local error " + std::to_string(err) + " exceeds tolerance " +
                         std::to_string(cfg_.tolerance) + " (dt=" + std::to_string(dt) +
                         ", krylov_dim=" + std::to_string(cfg_.krylov_dim) + ")");

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
  for (int i = 0; i < used; ++i) out += c(i) * v[i];
  const double nrm = out.norm();
  if (!std::isfinite(nrm) || nrm == 0.0) throw NumericalAbort("Krylov step lost the state norm");
  return out * (beta0 / nrm);
}

Eigen::VectorXcd KrylovPropagator::advance(const Eigen::VectorXcd& psi, double t, PropagationReport* report) const {
  if (!std::isfinite(t)) throw std::invalid_argument("propagation time must be finite");
  if (t == 0.0) return psi;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / cfg_.dt - 1e-9)));
  const double h = t / steps;
  Eigen::VectorXcd state = psi;
  for (int s = 0; s < steps; ++s) {
    double err = 0.0;
    state = step(state, h, &err);
    if (report) {
      ++report->steps;
      report->max_local_error = std::max(report->max_local_error, err);
    }
  }
  return state;
}

ManyBodyState propagate(const ManyBodyState& s, const LatticeModel& model, double t, const KrylovConfig& cfg,
                        PropagationReport* report) {
  if (!s.basis) throw std::invalid_argument("state has no basis");
  if (std::abs(s.amplitudes.norm() - 1.0) > 1e-10) throw std::invalid_argument("propagate needs a normalized state");
  const LatticeHamiltonian h(s.basis, model);
  const KrylovPropagator prop(h, cfg);
  return {s.basis, prop.advance(s.amplitudes, t, report)};
}

} // namespace effdyn
