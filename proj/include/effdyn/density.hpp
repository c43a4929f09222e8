#pragma once

#include "effdyn/lattice.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <vector>

namespace effdyn {

inline constexpr int default_reduce_cap = 4;

/// k-particle reduced density on M^k tuples; tuple (i_1, ..., i_k) has flat
/// index i_1 M^{k-1} + ... + i_k (slot 1 slowest).
struct ReducedDensity {
  int k = 1;
  int sites = 0;
  double spacing = 1.0;
  Eigen::MatrixXcd kernel;

  Eigen::Index tuple_count() const { return kernel.rows(); }
};

/// Unit-trace k-particle marginal of |psi><psi|.
ReducedDensity reduce(const ManyBodyState& s, int k, double spacing = 1.0, int cap = default_reduce_cap);

/// Traces out the last slot of a k-particle density (k >= 2).
ReducedDensity partial_trace_last(const ReducedDensity& g);

/// Rank-one (|phi><phi|)^{otimes k}.
ReducedDensity factorized_density(const Eigen::VectorXcd& orbital, int k, double spacing = 1.0);

/// Reorders slots: slot j of the result is slot perm[j] of the input.
ReducedDensity permute_slots(const ReducedDensity& g, const std::vector<int>& perm);

/// Sum of absolute eigenvalues of the hermitian part of a square matrix.
template <class Derived>
double trace_norm(const Eigen::MatrixBase<Derived>& a) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols()) throw std::invalid_argument("trace norm needs a square matrix");
  const Matrix h = (a + a.adjoint()) / 2;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const ReducedDensity& g, const ReducedDensity& r);

/// Tr |S (g - |phi><phi|) S| with S the lattice (1 + xi^2)^{1/4} multiplier.
double energy_norm_distance(const ReducedDensity& g, const Eigen::VectorXcd& orbital);

/// Tr((1 + xi^2)^{1/2} g) on the lattice.
double kinetic_of_density(const ReducedDensity& g);

/// I_{M^j} (x) a (x) I_{M^{k-j-1}}: an M x M operator acting on slot j of k.
Eigen::MatrixXcd slot_operator(const Eigen::MatrixXcd& a, int slot, int k);

/// Frobenius norm of i d/dt g_k (centered difference) minus the right side of the
/// finite-N hierarchy: sum_j [T_j, g_k] + s sum_{i<j} [v_ij, g_k]
/// + s (N - k) sum_j Tr_{k+1} [v_{j,k+1}, g_{k+1}], with s the model's pair strength.
double bbgky_residual(const ReducedDensity& before, const ReducedDensity& now, const ReducedDensity& after,
                      const ReducedDensity& next_order, const LatticeModel& model, double dt);

} // namespace effdyn
