#pragma once

#include "effdyn/grid.hpp"
#include "effdyn/onebody.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace effdyn {

inline constexpr std::int64_t default_basis_cap = 1'000'000;

/// C(n, k) saturated at `saturate` (returns saturate + 1 when larger).
std::int64_t binomial_capped(std::int64_t n, std::int64_t k, std::int64_t saturate);

/// Occupation-number basis of N bosons on M sites, ordered colexicographically
/// (compare the highest site first). The rank of an occupation vector is
/// sum_k C(b_k, k) where b_k = c_k + k - 1 for the sorted particle sites c_k.
class SymmetricBasis {
public:
  SymmetricBasis(int n_particles, int sites, std::int64_t cap = default_basis_cap);

  int n_particles() const { return n_; }
  int sites() const { return m_; }
  Eigen::Index dimension() const { return dim_; }

  std::span<const std::uint8_t> occupation(Eigen::Index index) const {
    return {occ_.data() + index * m_, static_cast<size_t>(m_)};
  }
  /// Index of an occupation vector summing to n_particles.
  Eigen::Index rank(std::span<const std::uint8_t> occupation) const;

  static std::int64_t dimension_for(int n_particles, int sites, std::int64_t cap = default_basis_cap);

private:
  int n_;
  int m_;
  Eigen::Index dim_;
  std::vector<std::uint8_t> occ_;
  std::vector<std::vector<std::int64_t>> binom_;
};

struct ManyBodyState {
  std::shared_ptr<const SymmetricBasis> basis;
  Eigen::VectorXcd amplitudes;
};

enum class CouplingRule { mean_field, raw };

/// N bosons on a periodic 1D lattice with spectral one-body operator and an
/// even pair potential v(r), r = 0..M-1 in units of the spacing.
struct LatticeModel {
  int sites = 0;
  int n_particles = 0;
  double spacing = 1.0;
  Dispersion dispersion = Dispersion::laplacian;
  Eigen::MatrixXcd one_body;
  Eigen::VectorXd pair_potential;
  CouplingRule coupling_rule = CouplingRule::mean_field;
  /// kappa for mean_field, lambda for raw.
  double coupling = 0.0;

  /// Strength multiplying sum_{i<j} v(x_i - x_j): kappa / N or lambda.
  double pair_strength() const;
  GridSpec grid() const { return GridSpec(1, sites, sites * spacing); }

  /// Spectral dispersion plus optional trap diagonal.
  static LatticeModel make(int sites, int n_particles, double spacing, Dispersion d,
                           Eigen::VectorXd pair_potential, CouplingRule rule, double coupling,
                           std::optional<Eigen::VectorXd> trap = std::nullopt);

  void validate() const;
};

/// U diag(m(xi)) U^dagger on the lattice frequencies 2 pi k / (M spacing).
Eigen::MatrixXcd lattice_multiplier_matrix(int sites, double spacing, const Multiplier& m);

/// Pair potential sampled from a function of the wrapped displacement (length units).
Eigen::VectorXd lattice_pair_potential(int sites, double spacing, const std::function<double(double)>& v);

/// Sparse row-major Hamiltonian for a fixed basis. Rows are evaluated
/// independently in a fixed order, so results do not depend on thread count.
class LatticeHamiltonian {
public:
  LatticeHamiltonian(std::shared_ptr<const SymmetricBasis> basis, const LatticeModel& model,
                     int threads = 1);

  const SymmetricBasis& basis() const { return *basis_; }
  std::shared_ptr<const SymmetricBasis> basis_ptr() const { return basis_; }
  const LatticeModel& model() const { return model_; }
  Eigen::Index dimension() const { return basis_->dimension(); }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  Eigen::MatrixXcd dense() const;
  double expectation(const Eigen::VectorXcd& x) const;

private:
  std::shared_ptr<const SymmetricBasis> basis_;
  LatticeModel model_;
  int threads_;
  std::vector<std::int64_t> row_start_;
  std::vector<std::int32_t> cols_;
  std::vector<Complex> vals_;
};

/// phi^{otimes N} in the occupation basis.
ManyBodyState product_state(const Eigen::VectorXcd& orbital, std::shared_ptr<const SymmetricBasis> basis);

Eigen::VectorXcd apply_hamiltonian(const ManyBodyState& s, const LatticeModel& model);

struct KrylovConfig {
  double dt = 0.05;
  int krylov_dim = 20;
  double tolerance = 1e-12;
};

struct PropagationReport {
  int steps = 0;
  double max_local_error = 0.0;
};

/// Short-iterative Lanczos propagator. Each step of size dt exponentiates H on a
/// Krylov subspace; the a posteriori local error must stay below tolerance.
class KrylovPropagator {
public:
  KrylovPropagator(const LatticeHamiltonian& h, KrylovConfig cfg);

  /// One step of size dt (may be shorter than cfg.dt); result renormalized.
  Eigen::VectorXcd step(const Eigen::VectorXcd& psi, double dt, double* local_error = nullptr) const;
  /// Advances by t in ceil(t / cfg.dt) equal steps.
  Eigen::VectorXcd advance(const Eigen::VectorXcd& psi, double t, PropagationReport* report = nullptr) const;

  const KrylovConfig& config() const { return cfg_; }

private:
  const LatticeHamiltonian& h_;
  KrylovConfig cfg_;
};

ManyBodyState propagate(const ManyBodyState& s, const LatticeModel& model, double t,
                        const KrylovConfig& cfg, PropagationReport* report = nullptr);

} // namespace effdyn
