#pragma once

#include "effdyn/csv.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace effdyn {

/// Repulsive, spherically symmetric pair potential V(r) >= 0.
struct RadialPotential {
  std::string name;
  std::function<double(double)> profile;
  /// Radius beyond which the profile is negligible.
  double range_hint = 1.0;
  /// Radii where the profile jumps or kinks; the integrator places nodes on them.
  std::vector<double> breakpoints;

  double operator()(double r) const { return profile(r); }

  static RadialPotential zero(double range_hint = 1.0);
  /// v0 for r < radius, 0 beyond.
  static RadialPotential square_well(double v0, double radius);
  /// v0 exp(-r^2 / (2 width^2)).
  static RadialPotential gaussian(double v0, double width);
  /// v0 for r < cutoff, v0 (cutoff / r)^power beyond; power must exceed 5.
  static RadialPotential inverse_power(double v0, double cutoff, double power);
  /// Piecewise-linear through (r_i, v_i), zero beyond the last sample.
  static RadialPotential tabulated(std::vector<double> radii, std::vector<double> values);

  /// c V for c >= 0.
  RadialPotential scaled(double c) const;
};

/// N^2 V(N r), whose scattering length is a0 / N.
RadialPotential scale_to_particle_number(const RadialPotential& v, int n_particles);

/// sup over sampled r in [0, r_max] of V(r) (1 + r^2)^(sigma/2).
double decay_envelope(const RadialPotential& v, double sigma, double r_max, int samples = 4000);

/// Integral of V over R^3, i.e. 4 pi int r^2 V(r) dr.
double potential_integral(const RadialPotential& v, double r_max, double step);

struct ScatteringOptions {
  double r_max = 0.0;
  double step = 0.0;

  static ScatteringOptions defaults_for(const RadialPotential& v);
  ScatteringOptions scaled_down(double factor) const { return {r_max / factor, step / factor}; }
};

struct ScatteringSolution {
  Eigen::VectorXd radial_grid;
  Eigen::VectorXd f_samples;
  double a0 = 0.0;
  /// Max fourth-order discrete defect of u'' = V u / 2 (u = r f).
  double residual = 0.0;
  /// max |u'(r) / slope - 1| over the fit window.
  double slope_deviation = 0.0;
  /// Node index at which each smooth segment starts (last entry = grid size - 1).
  std::vector<Eigen::Index> segment_bounds;
};

/// Integrates u'' = V u / 2 outward from u(0)=0, u'(0)=1 with fixed-step RK4,
/// reads a0 from a linear fit u ~ c (r - a0) over the last 20% of [0, r_max],
/// and normalizes f = u / (c r) -> 1. Throws NumericalAbort if the tail is not
/// linear to 1e-6.
ScatteringSolution solve_zero_energy(const RadialPotential& v, double r_max, double step);
ScatteringSolution solve_zero_energy(const RadialPotential& v, const ScatteringOptions& opts);

/// (1 / 8 pi) int V f d^3x by composite Simpson quadrature on the solution grid.
/// Throws NumericalAbort when the value changes by more than 1e-7 (relative)
/// under step doubling.
double scattering_length_integral(const RadialPotential& v, const ScatteringSolution& sol);

/// Scattering length of N^2 V(N r), solved from scratch with options scaled by 1/N.
double scaled_scattering_length(const RadialPotential& v, int n_particles,
                                const ScatteringOptions& opts);
ScatteringSolution solve_scaled(const RadialPotential& v, int n_particles,
                                const ScatteringOptions& opts);

/// Columns r, f, V.
Series scattering_table(const RadialPotential& v, const ScatteringSolution& sol);

} // namespace effdyn
