#include "effdyn/lattice.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace effdyn;

namespace {

constexpr Complex I{0.0, 1.0};

Eigen::VectorXcd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v.normalized();
}

// All occupation vectors of n bosons on m sites, by brute force.
std::vector<std::vector<std::uint8_t>> all_occupations(int n, int m) {
  std::vector<std::vector<std::uint8_t>> out;
  std::vector<std::uint8_t> occ(m, 0);
  std::function<void(int, int)> fill = [&](int site, int left) {
    if (site == m - 1) {
      occ[site] = static_cast<std::uint8_t>(left);
      out.push_back(occ);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      occ[site] = static_cast<std::uint8_t>(c);
      fill(site + 1, left - c);
    }
  };
  fill(0, n);
  return out;
}

// Colex: compare the highest site first, fewer particles there ranks lower.
bool colex_less(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  for (size_t i = a.size(); i-- > 0;)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

LatticeModel two_site_model(double v0, double v1, double lambda) {
  Eigen::VectorXd v(2);
  v << v0, v1;
  return LatticeModel::make(2, 2, 1.0, Dispersion::laplacian, v, CouplingRule::raw, lambda);
}

LatticeModel ring_model(int sites, int n, double kappa) {
  const auto v = lattice_pair_potential(sites, 1.0, [](double r) { return std::exp(-r * r); });
  return LatticeModel::make(sites, n, 1.0, Dispersion::laplacian, v, CouplingRule::mean_field, kappa);
}

} // namespace

TEST_CASE("basis dimensions are binomial") {
  CHECK(SymmetricBasis(2, 2).dimension() == 3);
  CHECK(SymmetricBasis(3, 4).dimension() == 20);
  CHECK(SymmetricBasis::dimension_for(4, 12) == 1365);
  CHECK(binomial_capped(39, 16, 1'000'000) == 1'000'001);
  CHECK_THROWS_WITH_AS(SymmetricBasis(16, 24), doctest::Contains("dimension"), std::invalid_argument);
}

TEST_CASE("basis is colex ordered and rank inverts enumeration") {
  for (auto [n, m] : {std::pair{2, 2}, std::pair{3, 4}, std::pair{4, 5}, std::pair{1, 6}}) {
    const SymmetricBasis b(n, m);
    auto expected = all_occupations(n, m);
    std::sort(expected.begin(), expected.end(), colex_less);
    REQUIRE(static_cast<Eigen::Index>(expected.size()) == b.dimension());
    for (Eigen::Index i = 0; i < b.dimension(); ++i) {
      const auto occ = b.occupation(i);
      CHECK(std::equal(occ.begin(), occ.end(), expected[i].begin()));
      CHECK(b.rank(occ) == i);
    }
  }
  const SymmetricBasis b(2, 2);
  CHECK(b.occupation(0)[0] == 2);
  CHECK(b.occupation(1)[0] == 1);
  CHECK(b.occupation(2)[1] == 2);
}

TEST_CASE("product state amplitudes for two bosons on two sites") {
  const auto basis = std::make_shared<const SymmetricBasis>(2, 2);
  Eigen::VectorXcd phi(2);
  phi << Complex(0.6, 0.0), Complex(0.0, 0.8);
  const auto s = product_state(phi, basis);
  CHECK(std::abs(s.amplitudes[0] - phi[0] * phi[0]) < 1e-15);
  CHECK(std::abs(s.amplitudes[1] - std::sqrt(2.0) * phi[0] * phi[1]) < 1e-15);
  CHECK(std::abs(s.amplitudes[2] - phi[1] * phi[1]) < 1e-15);
  CHECK(s.amplitudes.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(product_state(2.0 * phi, basis), std::invalid_argument);
}

TEST_CASE("two-site Hamiltonian matches the hand-derived matrix") {
  const double v0 = 1.3, v1 = 0.4, lambda = 0.7;
  const auto model = two_site_model(v0, v1, lambda);
  const LatticeHamiltonian h(std::make_shared<const SymmetricBasis>(2, 2), model);
  // Laplacian on two sites: frequencies 0 and pi, so T = (pi^2 / 2) [[1, -1], [-1, 1]].
  const double t0 = std::numbers::pi * std::numbers::pi / 2.0;
  const double r2 = std::sqrt(2.0);
  Eigen::Matrix3cd expected;
  expected << 2 * t0 + lambda * v0, -r2 * t0, 0.0,
              -r2 * t0, 2 * t0 + lambda * v1, -r2 * t0,
              0.0, -r2 * t0, 2 * t0 + lambda * v0;
  CHECK((h.dense() - expected).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
  const double mid = 2 * t0 + 0.5 * lambda * (v0 + v1);
  const double gap = std::sqrt(0.25 * lambda * lambda * (v0 - v1) * (v0 - v1) + 4 * t0 * t0);
  std::vector<double> oracle{mid - gap, 2 * t0 + lambda * v0, mid + gap};
  std::sort(oracle.begin(), oracle.end());
  for (int i = 0; i < 3; ++i) CHECK(std::abs(es.eigenvalues()[i] - oracle[i]) < 1e-12);
}

TEST_CASE("Hamiltonian is hermitian and apply matches dense") {
  auto model = ring_model(5, 3, 1.5);
  Eigen::VectorXd trap(5);
  trap << 0.1, -0.2, 0.3, 0.0, 0.5;
  model = LatticeModel::make(5, 3, 1.0, Dispersion::semirelativistic, model.pair_potential,
                             CouplingRule::mean_field, 1.5, trap);
  const LatticeHamiltonian h(std::make_shared<const SymmetricBasis>(3, 5), model);
  const Eigen::MatrixXcd d = h.dense();
  CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  const auto x = random_vector(h.dimension(), 3);
  CHECK((h.apply(x) - d * x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(h.expectation(x) == doctest::Approx((x.adjoint() * d * x)(0).real()).epsilon(1e-12));
}

TEST_CASE("model validation") {
  Eigen::VectorXd odd(4);
  odd << 1.0, 0.5, 0.2, 0.1;
  CHECK_THROWS_AS(LatticeModel::make(4, 2, 1.0, Dispersion::laplacian, odd, CouplingRule::raw, 1.0),
                  std::invalid_argument);
  auto model = ring_model(4, 2, 1.0);
  model.one_body(0, 1) += 1.0;
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  CHECK(ring_model(4, 2, 2.0).pair_strength() == doctest::Approx(1.0));
}

TEST_CASE("Krylov propagation of an eigenstate is a pure phase") {
  const auto model = ring_model(4, 3, 1.0);
  const LatticeHamiltonian h(std::make_shared<const SymmetricBasis>(3, 4), model);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
  const Eigen::VectorXcd v = es.eigenvectors().col(0);
  const double e = es.eigenvalues()[0];
  PropagationReport report;
  const auto out = KrylovPropagator(h, {0.05, 20, 1e-12}).advance(v, 10.0, &report);
  CHECK((out - std::exp(-I * e * 10.0) * v).norm() < 1e-8);
  CHECK(report.steps == 200);
  CHECK(report.max_local_error <= 1e-12);
}

TEST_CASE("Krylov propagation matches the dense exponential") {
  const auto model = ring_model(5, 2, 2.0);
  const LatticeHamiltonian h(std::make_shared<const SymmetricBasis>(2, 5), model);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
  const auto x = random_vector(h.dimension(), 7);
  const double t = 1.3;
  const Eigen::VectorXcd phases = (-I * t * es.eigenvalues().cast<Complex>()).array().exp();
  const Eigen::VectorXcd exact = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * x;
  CHECK((KrylovPropagator(h, {}).advance(x, t) - exact).norm() < 1e-9);
}

TEST_CASE("zero time is the identity") {
  const auto model = ring_model(4, 2, 1.0);
  const LatticeHamiltonian h(std::make_shared<const SymmetricBasis>(2, 4), model);
  const auto x = random_vector(h.dimension(), 11);
  CHECK(KrylovPropagator(h, {}).advance(x, 0.0) == x);
}

TEST_CASE("norm is preserved over 1e3 steps") {
  const auto model = ring_model(6, 3, 1.0);
  const auto basis = std::make_shared<const SymmetricBasis>(3, 6);
  const LatticeHamiltonian h(basis, model);
  const auto x = random_vector(h.dimension(), 5);
  const auto out = KrylovPropagator(h, {0.01, 20, 1e-12}).advance(x, 10.0);
  CHECK(std::abs(out.norm() - 1.0) < 1e-12);
  CHECK(h.expectation(out) == doctest::Approx(h.expectation(x)).epsilon(1e-9));
}

TEST_CASE("tight tolerance with a tiny subspace aborts") {
  const auto model = ring_model(6, 3, 1.0);
  const LatticeHamiltonian h(std::make_shared<const SymmetricBasis>(3, 6), model);
  const auto x = random_vector(h.dimension(), 5);
  CHECK_THROWS_AS(KrylovPropagator(h, {1.0, 3, 1e-12}).advance(x, 1.0), NumericalAbort);
}

TEST_CASE("results do not depend on thread count") {
  const auto model = ring_model(8, 4, 1.0);
  const auto basis = std::make_shared<const SymmetricBasis>(4, 8);
  const auto x = random_vector(basis->dimension(), 9);
  const LatticeHamiltonian h1(basis, model, 1);
  const LatticeHamiltonian h4(basis, model, 4);
  CHECK(h1.apply(x) == h4.apply(x));
  CHECK(KrylovPropagator(h1, {}).advance(x, 0.5) == KrylovPropagator(h4, {}).advance(x, 0.5));
}
