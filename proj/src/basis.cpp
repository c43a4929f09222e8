#include "effdyn/errors.hpp"
#include "effdyn/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace effdyn {

std::int64_t binomial_capped(std::int64_t n, std::int64_t k, std::int64_t saturate) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  // Multiplicative formula; intermediate values are exact binomials C(n-k+i, i).
  std::int64_t result = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    const __int128 next = static_cast<__int128>(result) * (n - k + i) / i;
    if (next > saturate) return saturate + 1;
    result = static_cast<std::int64_t>(next);
  }
  return result;
}

std::int64_t SymmetricBasis::dimension_for(int n_particles, int sites, std::int64_t cap) {
  if (n_particles < 0 || sites < 1) throw std::invalid_argument("basis needs N >= 0 and M >= 1");
  return binomial_capped(n_particles + sites - 1, n_particles, cap);
}

SymmetricBasis::SymmetricBasis(int n_particles, int sites, std::int64_t cap) : n_(n_particles), m_(sites) {
  if (n_particles < 0 || sites < 1) throw std::invalid_argument("basis needs N >= 0 and M >= 1");
  if (n_particles > 255) throw std::invalid_argument("basis supports at most 255 particles");
  const std::int64_t dim = dimension_for(n_particles, sites, cap);
  if (dim > cap) {
    // Report the exact dimension when it fits in a double, else the saturated bound.
    const double exact = std::exp(std::lgamma(n_particles + sites) - std::lgamma(n_particles + 1.0) -
                                  std::lgamma(static_cast<double>(sites)));
    throw std::invalid_argument("basis dimension C(" + std::to_string(n_particles + sites - 1) + ", " +
                                std::to_string(n_particles) + ") ~ " + std::to_string(exact) +
                                " exceeds cap " + std::to_string(cap));
  }
  dim_ = dim;

  // binom_[k][b] = C(b, k) for k <= N, b <= N + M - 2.
  const int top = n_ + m_ - 1;
  binom_.assign(n_ + 1, std::vector<std::int64_t>(top + 1, 0));
  for (int k = 0; k <= n_; ++k)
    for (int b = 0; b <= top; ++b) binom_[k][b] = binomial_capped(b, k, cap);

  occ_.assign(static_cast<size_t>(dim_) * m_, 0);
  std::vector<int> combination(n_);
  for (Eigen::Index r = 0; r < dim_; ++r) {
    // Greedy colex unranking: largest b_k with C(b_k, k) <= remainder.
    std::int64_t rem = r;
    int upper = top;
    for (int k = n_; k >= 1; --k) {
      int b = k - 1;
      while (b + 1 < upper && binom_[k][b + 1] <= rem) ++b;
      rem -= binom_[k][b];
      combination[k - 1] = b;
      upper = b;
    }
    std::uint8_t* row = occ_.data() + r * m_;
    for (int k = 0; k < n_; ++k) ++row[combination[k] - k];
  }
}

Eigen::Index SymmetricBasis::rank(std::span<const std::uint8_t> occupation) const {
  if (static_cast<int>(occupation.size()) != m_) throw std::invalid_argument("occupation length differs from site count");
  std::int64_t r = 0;
  int k = 1;
  for (int site = 0; site < m_; ++site) {
    for (int c = 0; c < occupation[site]; ++c, ++k) {
      if (k > n_) throw std::invalid_argument("occupation exceeds particle number");
      r += binom_[k][site + k - 1];
    }
  }
  if (k != n_ + 1) throw std::invalid_argument("occupation does not sum to particle number");
  return r;
}

ManyBodyState product_state(const Eigen::VectorXcd& orbital, std::shared_ptr<const SymmetricBasis> basis) {
  if (!basis) throw std::invalid_argument("product_state needs a basis");
  const int m = basis->sites();
  const int n = basis->n_particles();
  if (orbital.size() != m) throw std::invalid_argument("orbital length differs from site count");
  if (std::abs(orbital.norm() - 1.0) > 1e-10) throw std::invalid_argument("product_state needs a normalized orbital");

  ManyBodyState s{basis, Eigen::VectorXcd(basis->dimension())};
  const double log_n_factorial = std::lgamma(n + 1.0);
  for (Eigen::Index r = 0; r < basis->dimension(); ++r) {
    const auto occ = basis->occupation(r);
    double log_weight = log_n_factorial;
    Complex amp(1.0, 0.0);
    for (int i = 0; i < m; ++i) {
      if (occ[i] == 0) continue;
      log_weight -= std::lgamma(occ[i] + 1.0);
      for (int p = 0; p < occ[i]; ++p) amp *= orbital(i);
    }
    s.amplitudes(r) = std::sqrt(std::exp(log_weight)) * amp;
  }
  const double nrm = s.amplitudes.norm();
  if (!(nrm > 0.0)) throw NumericalAbort("product state has zero norm");
  s.amplitudes /= nrm;
  return s;
}

} // namespace effdyn
