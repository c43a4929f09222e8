#include "effdyn/onebody.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace effdyn;

namespace {

constexpr Complex I{0.0, 1.0};

// Exact solution of i phi_t = -phi'' from a centred Gaussian of width s.
Field free_gaussian(const GridSpec& g, double s, double t) {
  const Complex w = s * s + 2.0 * I * t;
  const double amplitude = std::pow(std::numbers::pi * s * s, -0.25);
  return Field::from_function(g, [&](const std::array<double, 3>& x) {
    return amplitude * std::sqrt(s * s / w) * std::exp(-x[0] * x[0] / (2.0 * w));
  });
}

double relative_l2(const Field& a, const Field& b) {
  return l2_norm(Field(a.grid, a.values - b.values)) / l2_norm(b);
}

Field constant_field(const GridSpec& g) {
  Field f(g);
  f.values.setConstant(1.0 / std::sqrt(g.volume()));
  return f;
}

double max_energy_drift(const Field& phi0, const EvolutionModel& model, double dt, double horizon) {
  const int steps = static_cast<int>(std::lround(horizon / dt));
  const auto run = run_evolution(phi0, model, {dt, 1}, steps);
  const auto e = run.series.column("energy");
  double drift = 0.0;
  for (double v : e) drift = std::max(drift, std::abs(v - e.front()));
  return drift;
}

} // namespace

TEST_CASE("free Gaussian matches the closed-form propagator") {
  const GridSpec g(1, 256, 40.0);
  const double s = 1.0;
  const auto run = run_evolution(free_gaussian(g, s, 0.0), EvolutionModel::linear(), {1e-3, 100}, 1000);
  CHECK(relative_l2(run.final_state, free_gaussian(g, s, 1.0)) < 1e-6);
}

TEST_CASE("GP evolution of a constant is a pure phase") {
  const GridSpec g(1, 64, 10.0);
  const double c = 3.0;
  const Field phi = constant_field(g);
  const double dt = 1e-3;
  Field f = phi;
  const SplitStepper stepper(g, EvolutionModel::gp(c), {dt, 1});
  for (int n = 0; n < 100; ++n) f = stepper.step(f);
  const double rho = 1.0 / g.volume();
  Field expected(g, phi.values * std::exp(-I * c * rho * 100.0 * dt));
  CHECK(relative_l2(f, expected) < 1e-12);
}

TEST_CASE("mass is conserved to 1e-10 over 1e4 steps") {
  const GridSpec g(1, 64, 20.0);
  const Field phi = gaussian_field(g, 1.0, {0, 0, 0}, {0.5, 0, 0});
  for (const auto& model : {EvolutionModel::gp(5.0), EvolutionModel::sr_hartree(1.0, 0.1),
                            EvolutionModel::hartree(2.0, KernelSpec::radial(g, [](double r) { return std::exp(-r * r); }))}) {
    CAPTURE(model.describe());
    const auto run = run_evolution(phi, model, {1e-3, 1000}, 10000);
    for (double m : run.series.column("mass")) CHECK(std::abs(m - 1.0) < 1e-10);
  }
}

TEST_CASE("energy drift falls fourfold under step halving") {
  const GridSpec g(1, 64, 20.0);
  const Field phi = gaussian_field(g, 1.0, {0, 0, 0}, {0.5, 0, 0});
  for (const auto& model : {EvolutionModel::gp(5.0), EvolutionModel::sr_hartree(1.0, 0.1)}) {
    CAPTURE(model.describe());
    const double coarse = max_energy_drift(phi, model, 0.01, 1.0);
    const double fine = max_energy_drift(phi, model, 0.005, 1.0);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.2));
  }
}

TEST_CASE("global phase commutes with the flow") {
  const GridSpec g(1, 64, 20.0);
  const Field phi = gaussian_field(g, 1.0, {1.0, 0, 0}, {0.3, 0, 0});
  const Complex phase = std::polar(1.0, 0.7);
  const auto model = EvolutionModel::gp(4.0);
  const auto a = run_evolution(phi, model, {1e-3, 100}, 200).final_state;
  const auto b = run_evolution(Field(g, phase * phi.values), model, {1e-3, 100}, 200).final_state;
  CHECK(relative_l2(Field(g, phase * a.values), b) < 1e-13);
}

TEST_CASE("Galilean boost of the free flow") {
  const GridSpec g(1, 256, 40.0);
  const double k = 2.0 * std::numbers::pi * 3.0 / g.box_length();
  const Field phi = gaussian_field(g, 1.0);
  const Field boosted = gaussian_field(g, 1.0, {0, 0, 0}, {k, 0, 0});
  const double t = 0.5;
  const auto model = EvolutionModel::linear();
  const auto a = run_evolution(phi, model, {1e-3, 500}, 500).final_state;
  const auto b = run_evolution(boosted, model, {1e-3, 500}, 500).final_state;
  // Translate a by 2 k t spectrally, then apply the plane-wave factor.
  Eigen::ArrayXcd shift(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) shift[i] = std::exp(-I * g.wavevector(i)[0] * 2.0 * k * t);
  Field expected = apply_spectral_factors(a, shift);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    expected.values[i] *= std::exp(I * (k * g.position(i)[0] - k * k * t));
  CHECK(relative_l2(b, expected) < 1e-10);
}

TEST_CASE("GP energy of a constant is 4 pi a0 / V") {
  const double a0 = 0.25;
  for (int d : {1, 3}) {
    const GridSpec g(d, d == 1 ? 64 : 8, 3.0);
    CHECK(energy(constant_field(g), EvolutionModel::gp_from_scattering_length(a0)) ==
          doctest::Approx(4.0 * std::numbers::pi * a0 / g.volume()).epsilon(1e-12));
  }
}

TEST_CASE("harmonic ground state energy is d sqrt(c)") {
  SUBCASE("1D, c = 1") {
    const GridSpec g(1, 128, 20.0);
    const auto model = EvolutionModel::linear().with_trap(TrapSpec::harmonic(g, 1.0));
    const auto gs = minimize_imaginary_time(model, gaussian_field(g, 2.0, {0.3, 0, 0}), {1e-2, 1e-13, 100000});
    CHECK(gs.converged);
    CHECK(gs.energy == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("3D, c = 4") {
    const GridSpec g(3, 32, 8.0);
    const auto model = EvolutionModel::linear().with_trap(TrapSpec::harmonic(g, 4.0));
    const auto gs = minimize_imaginary_time(model, normalized(gaussian_field(g, 1.0)), {5e-3, 1e-12, 100000});
    CHECK(gs.energy == doctest::Approx(6.0).epsilon(1e-3));
  }
}

TEST_CASE("untrapped GP minimizer on a torus is the constant") {
  const GridSpec g(1, 32, 4.0);
  const auto model = EvolutionModel::gp(2.0);
  const auto gs = minimize_imaginary_time(model, normalized(gaussian_field(g, 0.8)), {1e-2, 1e-14, 200000});
  const Eigen::ArrayXd rho = density(gs.state);
  CHECK((rho - 1.0 / g.volume()).abs().maxCoeff() < 1e-5);
  CHECK(gs.energy == doctest::Approx(1.0 / g.volume()).epsilon(1e-6));
}

TEST_CASE("minimization requires confinement") {
  const GridSpec g(1, 32, 4.0);
  CHECK_THROWS_AS(minimize_imaginary_time(EvolutionModel::linear(), gaussian_field(g, 0.8), {}),
                  std::invalid_argument);
}

TEST_CASE("critical coupling bracket for the Gaussian trial") {
  const GridSpec g(3, 32, 2.0);
  const Field trial = gaussian_field(g, 0.15);
  std::vector<double> mu;
  for (int i = 0; i <= 20; ++i) mu.push_back(0.1 * std::pow(14.0, i / 20.0));
  std::vector<double> lambda;
  for (int i = 0; i <= 60; ++i) lambda.push_back(0.1 * i);
  const auto est = estimate_critical_coupling(trial, mu, lambda);
  const double oracle = 2.0 * std::sqrt(2.0);
  CHECK(est.lower >= 0.0);
  CHECK(est.lower <= est.upper);
  CHECK(est.lower <= oracle + 0.1);
  CHECK(est.upper >= oracle - 0.1);
  CHECK(std::isfinite(est.upper));
  // E is exactly the kinetic energy at lambda = 0, hence positive.
  for (double e : est.energies.front()) CHECK(e > 0.0);
}

TEST_CASE("critical coupling scan validates its grids") {
  const GridSpec g(3, 16, 2.0);
  const Field trial = gaussian_field(g, 0.15);
  CHECK_THROWS_AS(estimate_critical_coupling(trial, {1.0, 2.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_critical_coupling(gaussian_field(GridSpec(1, 16, 2.0), 0.15), {0.1, 1.0}, {1.0}),
                  std::invalid_argument);
}

TEST_CASE("monitor_blowup needs monotone growth past the threshold") {
  const std::vector<double> t{0, 1, 2, 3, 4, 5};
  CHECK(monitor_blowup(t, {1, 2, 4, 8, 16, 32}, 10.0, 3).detection_time == 4.0);
  CHECK_FALSE(monitor_blowup(t, {1, 20, 4, 30, 5, 40}, 10.0, 3).blew_up);
  CHECK_FALSE(monitor_blowup(t, {1, 1, 1, 1, 1, 1}, 10.0, 2).blew_up);
  CHECK_THROWS_AS(monitor_blowup(t, {1.0}, 10.0, 2), std::invalid_argument);
}

TEST_CASE("regularization alpha is N^-beta") {
  CHECK(regularization_alpha(1, 0.5) == 1.0);
  CHECK(regularization_alpha(16, 0.5) == doctest::Approx(0.25));
  CHECK_THROWS_AS(regularization_alpha(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(regularization_alpha(4, 0.0), std::invalid_argument);
}

TEST_CASE("phase-wrap guard rejects oversized steps") {
  const GridSpec g(1, 64, 10.0);
  const double limit = std::numbers::pi / g.max_frequency_squared();
  CHECK_NOTHROW(check_phase_wrap_guard(g, Dispersion::laplacian, 0.99 * limit));
  CHECK_THROWS_WITH_AS(SplitStepper(g, EvolutionModel::linear(), {1.01 * limit, 1}),
                       doctest::Contains("phase-wrap guard"), std::invalid_argument);
}

TEST_CASE("unnormalized input is rejected") {
  const GridSpec g(1, 64, 10.0);
  Field f = gaussian_field(g, 1.0);
  f.values *= 2.0;
  CHECK_THROWS_AS(run_evolution(f, EvolutionModel::linear(), {1e-3, 1}, 1), std::invalid_argument);
}

TEST_CASE("constant potential shift is a global phase") {
  const GridSpec g(1, 64, 20.0);
  const Field phi = gaussian_field(g, 1.0, {0, 0, 0}, {0.4, 0, 0});
  const double c = 0.7, dt = 1e-3;
  const int steps = 300;
  const auto model = EvolutionModel::gp(4.0);
  const auto shifted = model.with_trap(TrapSpec(Eigen::ArrayXd::Constant(g.size(), c)));
  const auto a = run_evolution(phi, model, {dt, steps}, steps).final_state;
  const auto b = run_evolution(phi, shifted, {dt, steps}, steps).final_state;
  CHECK(relative_l2(Field(g, std::exp(-I * c * (steps * dt)) * a.values), b) < 1e-12);
  CHECK((density(a) - density(b)).abs().maxCoeff() < 1e-13);
}

TEST_CASE("imaginary-time energies never increase") {
  const GridSpec g(1, 128, 20.0);
  const auto model = EvolutionModel::gp(10.0).with_trap(TrapSpec::harmonic(g, 1.0));
  const auto gs = minimize_imaginary_time(model, gaussian_field(g, 2.0), {1e-2, 1e-12, 100000});
  CHECK(gs.converged);
  for (size_t i = 1; i < gs.energy_history.size(); ++i) CHECK(gs.energy_history[i] <= gs.energy_history[i - 1]);
}
