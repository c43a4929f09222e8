#include "effdyn/density.hpp"
#include "effdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numeric>
#include <string>

namespace effdyn {

namespace {

Eigen::Index int_power(int base, int exp) {
  Eigen::Index out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

std::vector<int> decode_tuple(Eigen::Index index, int sites, int k) {
  std::vector<int> digits(k);
  for (int j = k - 1; j >= 0; --j) {
    digits[j] = static_cast<int>(index % sites);
    index /= sites;
  }
  return digits;
}

Eigen::Index encode_tuple(const std::vector<int>& digits, int sites) {
  Eigen::Index index = 0;
  for (int d : digits) index = index * sites + d;
  return index;
}

void check_density(const ReducedDensity& g) {
  if (g.k < 1 || g.sites < 1) throw std::invalid_argument("reduced density needs k >= 1 and M >= 1");
  const Eigen::Index n = int_power(g.sites, g.k);
  if (g.kernel.rows() != n || g.kernel.cols() != n)
    throw std::invalid_argument("reduced density kernel must be M^k x M^k");
}

} // namespace

ReducedDensity reduce(const ManyBodyState& s, int k, double spacing, int cap) {
  if (!s.basis) throw std::invalid_argument("state has no basis");
  const SymmetricBasis& basis = *s.basis;
  const int n = basis.n_particles();
  const int m = basis.sites();
  if (k < 1) throw std::invalid_argument("reduce needs k >= 1");
  if (k > n || k > cap)
    throw std::invalid_argument("reduce order k=" + std::to_string(k) + " exceeds min(N=" + std::to_string(n) +
                                ", cap=" + std::to_string(cap) + ")");
  if (s.amplitudes.size() != basis.dimension())
    throw std::invalid_argument("amplitude vector length differs from basis dimension");
  if (std::abs(s.amplitudes.norm() - 1.0) > 1e-10) throw std::invalid_argument("reduce needs a normalized state");

  // chi_I = a_{i_k} ... a_{i_1} psi lives in the (N - k)-particle basis.
  const SymmetricBasis lower(n - k, m, std::numeric_limits<std::int64_t>::max() / 2);
  const Eigen::Index tuples = int_power(m, k);
  Eigen::MatrixXcd chi = Eigen::MatrixXcd::Zero(lower.dimension(), tuples);
  std::vector<std::uint8_t> occ(m);

  std::function<void(int, Eigen::Index, Complex)> annihilate = [&](int slot, Eigen::Index index, Complex factor) {
    if (slot == k) {
      chi(lower.rank(occ), index) += factor;
      return;
    }
    for (int i = 0; i < m; ++i) {
      if (occ[i] == 0) continue;
      const double w = std::sqrt(static_cast<double>(occ[i]));
      --occ[i];
      annihilate(slot + 1, index * m + i, factor * w);
      ++occ[i];
    }
  };
  for (Eigen::Index r = 0; r < basis.dimension(); ++r) {
    const Complex amp = s.amplitudes(r);
    if (amp == Complex(0.0)) continue;
    const auto o = basis.occupation(r);
    std::copy(o.begin(), o.end(), occ.begin());
    annihilate(0, 0, amp);
  }

  // (N - k)! / N!
  double c = 1.0;
  for (int i = n - k + 1; i <= n; ++i) c /= i;
  ReducedDensity g;
  g.k = k;
  g.sites = m;
  g.spacing = spacing;
  g.kernel = c * (chi.adjoint() * chi).transpose();
  g.kernel = 0.5 * (g.kernel + g.kernel.adjoint()).eval();
  return g;
}

ReducedDensity partial_trace_last(const ReducedDensity& g) {
  check_density(g);
  if (g.k < 2) throw std::invalid_argument("partial trace needs k >= 2");
  const int m = g.sites;
  const Eigen::Index n = int_power(m, g.k - 1);
  ReducedDensity out{g.k - 1, m, g.spacing, Eigen::MatrixXcd::Zero(n, n)};
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      Complex acc = 0.0;
      for (int l = 0; l < m; ++l) acc += g.kernel(i * m + l, j * m + l);
      out.kernel(i, j) = acc;
    }
  return out;
}

ReducedDensity factorized_density(const Eigen::VectorXcd& orbital, int k, double spacing) {
  if (k < 1) throw std::invalid_argument("factorized density needs k >= 1");
  Eigen::VectorXcd tensor = orbital;
  for (int j = 1; j < k; ++j) {
    Eigen::VectorXcd next(tensor.size() * orbital.size());
    for (Eigen::Index a = 0; a < tensor.size(); ++a)
      next.segment(a * orbital.size(), orbital.size()) = tensor(a) * orbital;
    tensor = std::move(next);
  }
  return {k, static_cast<int>(orbital.size()), spacing, tensor * tensor.adjoint()};
}

ReducedDensity permute_slots(const ReducedDensity& g, const std::vector<int>& perm) {
  check_density(g);
  if (static_cast<int>(perm.size()) != g.k) throw std::invalid_argument("permutation length differs from k");
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (int j = 0; j < g.k; ++j)
    if (sorted[j] != j) throw std::invalid_argument("not a permutation of the slots");
  const Eigen::Index n = g.kernel.rows();
  std::vector<Eigen::Index> map(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto digits = decode_tuple(i, g.sites, g.k);
    std::vector<int> permuted(g.k);
    for (int j = 0; j < g.k; ++j) permuted[j] = digits[perm[j]];
    map[i] = encode_tuple(permuted, g.sites);
  }
  ReducedDensity out{g.k, g.sites, g.spacing, Eigen::MatrixXcd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out.kernel(i, j) = g.kernel(map[i], map[j]);
  return out;
}

double trace_distance(const ReducedDensity& g, const ReducedDensity& r) {
  check_density(g);
  check_density(r);
  if (g.k != r.k || g.sites != r.sites)
    throw std::invalid_argument("trace distance needs densities of equal k and M");
  return trace_norm(g.kernel - r.kernel);
}

double energy_norm_distance(const ReducedDensity& g, const Eigen::VectorXcd& orbital) {
  check_density(g);
  if (g.k != 1) throw std::invalid_argument("energy-norm distance needs k = 1");
  if (orbital.size() != g.sites) throw std::invalid_argument("orbital length differs from site count");
  const Eigen::MatrixXcd s = lattice_multiplier_matrix(g.sites, g.spacing, Multiplier::sobolev_quarter());
  const Eigen::MatrixXcd d = g.kernel - orbital * orbital.adjoint();
  return trace_norm(s * d * s);
}

double kinetic_of_density(const ReducedDensity& g) {
  check_density(g);
  if (g.k != 1) throw std::invalid_argument("kinetic_of_density needs k = 1");
  const Eigen::MatrixXcd s = lattice_multiplier_matrix(g.sites, g.spacing, Multiplier::sobolev_half());
  return (s * g.kernel).trace().real();
}

Eigen::MatrixXcd slot_operator(const Eigen::MatrixXcd& a, int slot, int k) {
  if (a.rows() != a.cols()) throw std::invalid_argument("slot operator needs a square matrix");
  if (slot < 0 || slot >= k) throw std::invalid_argument("slot index out of range");
  const int m = static_cast<int>(a.rows());
  const Eigen::Index outer = int_power(m, slot);
  const Eigen::Index inner = int_power(m, k - slot - 1);
  const Eigen::Index n = outer * m * inner;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index o = 0; o < outer; ++o)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const Complex v = a(i, j);
        if (v == Complex(0.0)) continue;
        for (Eigen::Index q = 0; q < inner; ++q) out((o * m + i) * inner + q, (o * m + j) * inner + q) = v;
      }
  return out;
}

double bbgky_residual(const ReducedDensity& before, const ReducedDensity& now, const ReducedDensity& after,
                      const ReducedDensity& next_order, const LatticeModel& model, double dt) {
  for (const auto* g : {&before, &now, &after}) {
    check_density(*g);
    if (g->k != now.k || g->sites != model.sites)
      throw std::invalid_argument("hierarchy densities must share k and the model's site count");
  }
  check_density(next_order);
  if (next_order.k != now.k + 1 || next_order.sites != model.sites)
    throw std::invalid_argument("next-order density must have k + 1 slots");
  if (now.k >= model.n_particles) throw std::invalid_argument("hierarchy residual needs k < N");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");

  const int m = model.sites;
  const int k = now.k;
  const Eigen::Index n = now.kernel.rows();
  const double s = model.pair_strength();
  auto v = [&](int a, int b) { return model.pair_potential(((a - b) % m + m) % m); };

  Eigen::MatrixXcd lhs = Complex(0.0, 1.0) * (after.kernel - before.kernel) / (2.0 * dt);

  Eigen::MatrixXcd one_body = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < k; ++j) one_body += slot_operator(model.one_body, j, k);
  Eigen::MatrixXcd rhs = one_body * now.kernel - now.kernel * one_body;

  std::vector<std::vector<int>> digits(n);
  Eigen::VectorXd internal(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    digits[i] = decode_tuple(i, m, k);
    double acc = 0.0;
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) acc += v(digits[i][a], digits[i][b]);
    internal(i) = acc;
  }
  const double collision = s * (model.n_particles - k);
  for (Eigen::Index jj = 0; jj < n; ++jj)
    for (Eigen::Index ii = 0; ii < n; ++ii) {
      Complex acc = s * (internal(ii) - internal(jj)) * now.kernel(ii, jj);
      Complex col = 0.0;
      for (int l = 0; l < m; ++l) {
        double dv = 0.0;
        for (int j = 0; j < k; ++j) dv += v(digits[ii][j], l) - v(digits[jj][j], l);
        if (dv != 0.0) col += dv * next_order.kernel(ii * m + l, jj * m + l);
      }
      rhs(ii, jj) += acc + collision * col;
    }
  return (lhs - rhs).norm();
}

} // namespace effdyn
