#include "effdyn/scattering.hpp"

#include "effdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace effdyn {

namespace {

void require_non_negative(double v0, const char* what) {
  if (!(v0 >= 0.0) || !std::isfinite(v0))
    throw std::invalid_argument(std::string(what) + ": strength must be finite and non-negative");
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

struct Segment {
  double a;
  double b;
  int substeps;
};

// Splits [0, r_max] at breakpoints; every segment gets a multiple of four equal
// substeps so Simpson's rule also applies on every other node.
std::vector<Segment> build_segments(const RadialPotential& v, double r_max, double step) {
  std::vector<double> cuts{0.0};
  std::vector<double> bps = v.breakpoints;
  std::sort(bps.begin(), bps.end());
  for (double bp : bps)
    if (bp > cuts.back() && bp < r_max) cuts.push_back(bp);
  cuts.push_back(r_max);
  std::vector<Segment> segs;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    int n = static_cast<int>(std::ceil(len / step - 1e-9));
    n = std::max(4, (n + 3) / 4 * 4);
    segs.push_back({cuts[i], cuts[i + 1], n});
  }
  return segs;
}

// Potential evaluated from inside [a, b] so jumps at the ends take the
// segment's own one-sided value.
double inside(const RadialPotential& v, double r, double a, double b) {
  const double lo = std::nextafter(a, b);
  const double hi = std::nextafter(b, a);
  return v(std::clamp(r, lo, hi));
}

double simpson(const std::vector<double>& y, double h, int stride) {
  const size_t n = (y.size() - 1) / stride;
  double s = y.front() + y[n * stride];
  for (size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * y[i * stride];
  return s * h * stride / 3.0;
}

} // namespace

RadialPotential RadialPotential::zero(double range_hint) {
  require_positive(range_hint, "range hint");
  return {"zero", [](double) { return 0.0; }, range_hint, {}};
}

RadialPotential RadialPotential::square_well(double v0, double radius) {
  require_non_negative(v0, "square well");
  require_positive(radius, "square well radius");
  return {"square_well", [v0, radius](double r) { return r < radius ? v0 : 0.0; }, radius, {radius}};
}

RadialPotential RadialPotential::gaussian(double v0, double width) {
  require_non_negative(v0, "gaussian");
  require_positive(width, "gaussian width");
  return {"gaussian",
          [v0, width](double r) { return v0 * std::exp(-0.5 * r * r / (width * width)); },
          7.0 * width,
          {}};
}

RadialPotential RadialPotential::inverse_power(double v0, double cutoff, double power) {
  require_non_negative(v0, "inverse power");
  require_positive(cutoff, "inverse power cutoff");
  if (!(power > 5.0)) throw std::invalid_argument("inverse power exponent must exceed 5");
  return {"inverse_power",
          [v0, cutoff, power](double r) { return r < cutoff ? v0 : v0 * std::pow(cutoff / r, power); },
          cutoff * std::pow(1e8, 1.0 / power),
          {cutoff}};
}

RadialPotential RadialPotential::tabulated(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() != values.size() || radii.size() < 2)
    throw std::invalid_argument("tabulated potential needs at least two (r, V) pairs");
  for (size_t i = 0; i < radii.size(); ++i) {
    require_non_negative(values[i], "tabulated potential");
    if (i && !(radii[i] > radii[i - 1]))
      throw std::invalid_argument("tabulated potential radii must increase");
  }
  if (radii.front() < 0.0) throw std::invalid_argument("tabulated potential radii must be >= 0");
  auto rs = std::make_shared<std::vector<double>>(std::move(radii));
  auto vs = std::make_shared<std::vector<double>>(std::move(values));
  const double range = rs->back();
  std::vector<double> kinks = *rs;
  auto profile = [rs, vs](double r) {
    if (r <= rs->front()) return vs->front();
    if (r >= rs->back()) return 0.0;
    const auto it = std::upper_bound(rs->begin(), rs->end(), r);
    const size_t i = static_cast<size_t>(it - rs->begin());
    const double t = (r - (*rs)[i - 1]) / ((*rs)[i] - (*rs)[i - 1]);
    return (1.0 - t) * (*vs)[i - 1] + t * (*vs)[i];
  };
  return {"tabulated", profile, range, kinks};
}

RadialPotential RadialPotential::scaled(double c) const {
  require_non_negative(c, "potential scale");
  auto base = profile;
  return {name, [base, c](double r) { return c * base(r); }, range_hint, breakpoints};
}

RadialPotential scale_to_particle_number(const RadialPotential& v, int n_particles) {
  if (n_particles < 1) throw std::invalid_argument("particle number must be >= 1");
  const double n = n_particles;
  auto base = v.profile;
  RadialPotential out{v.name, [base, n](double r) { return n * n * base(n * r); }, v.range_hint / n, {}};
  for (double bp : v.breakpoints) out.breakpoints.push_back(bp / n);
  return out;
}

double decay_envelope(const RadialPotential& v, double sigma, double r_max, int samples) {
  double sup = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double r = r_max * i / samples;
    sup = std::max(sup, v(r) * std::pow(1.0 + r * r, 0.5 * sigma));
  }
  return sup;
}

double potential_integral(const RadialPotential& v, double r_max, double step) {
  double total = 0.0;
  for (const auto& seg : build_segments(v, r_max, step)) {
    const double h = (seg.b - seg.a) / seg.substeps;
    std::vector<double> y(seg.substeps + 1);
    for (int i = 0; i <= seg.substeps; ++i) {
      const double r = seg.a + i * h;
      y[i] = r * r * inside(v, r, seg.a, seg.b);
    }
    total += simpson(y, h, 1);
  }
  return 4.0 * std::numbers::pi * total;
}

ScatteringOptions ScatteringOptions::defaults_for(const RadialPotential& v) {
  // Resolve the finest feature: the range or the innermost breakpoint.
  double scale = v.range_hint;
  for (double bp : v.breakpoints)
    if (bp > 0.0) scale = std::min(scale, bp);
  return {40.0 * v.range_hint, 1e-3 * scale};
}

ScatteringSolution solve_zero_energy(const RadialPotential& v, const ScatteringOptions& opts) {
  return solve_zero_energy(v, opts.r_max, opts.step);
}

ScatteringSolution solve_zero_energy(const RadialPotential& v, double r_max, double step) {
  require_positive(r_max, "r_max");
  require_positive(step, "step");
  if (step > 0.05 * r_max) throw std::invalid_argument("scattering step does not resolve [0, r_max]");

  const auto segs = build_segments(v, r_max, step);
  Eigen::Index total = 1;
  for (const auto& s : segs) total += s.substeps;

  Eigen::VectorXd r(total), u(total), du(total), vv(total);
  std::vector<Eigen::Index> bounds{0};
  r[0] = 0.0;
  u[0] = 0.0;
  du[0] = 1.0;
  Eigen::Index k = 0;
  for (const auto& seg : segs) {
    const double h = (seg.b - seg.a) / seg.substeps;
    vv[k] = inside(v, r[k], seg.a, seg.b);
    for (int i = 0; i < seg.substeps; ++i) {
      const double r0 = seg.a + i * h;
      const double rm = r0 + 0.5 * h;
      const double r1 = i + 1 == seg.substeps ? seg.b : seg.a + (i + 1) * h;
      const double v0 = inside(v, r0, seg.a, seg.b);
      const double vm = inside(v, rm, seg.a, seg.b);
      const double v1 = inside(v, r1, seg.a, seg.b);
      const double y0 = u[k], p0 = du[k];
      const double k1y = p0, k1p = 0.5 * v0 * y0;
      const double k2y = p0 + 0.5 * h * k1p, k2p = 0.5 * vm * (y0 + 0.5 * h * k1y);
      const double k3y = p0 + 0.5 * h * k2p, k3p = 0.5 * vm * (y0 + 0.5 * h * k2y);
      const double k4y = p0 + h * k3p, k4p = 0.5 * v1 * (y0 + h * k3y);
      ++k;
      r[k] = r1;
      u[k] = y0 + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      du[k] = p0 + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
      vv[k] = v1;
    }
    bounds.push_back(k);
  }
  if (!u.allFinite() || !du.allFinite())
    throw NumericalAbort("zero-energy integration produced non-finite values");

  // Least squares u = c1 (r - r_mean) + u_mean over the tail window, centred
  // to avoid cancellation.
  const double window_start = 0.8 * r_max;
  double sr = 0, su = 0;
  int count = 0;
  for (Eigen::Index i = 0; i < total; ++i) {
    if (r[i] < window_start) continue;
    sr += r[i];
    su += u[i];
    ++count;
  }
  if (count < 3) throw NumericalAbort("tail window holds fewer than three nodes");
  const double r_mean = sr / count, u_mean = su / count;
  double srr = 0, sru = 0;
  for (Eigen::Index i = 0; i < total; ++i) {
    if (r[i] < window_start) continue;
    srr += (r[i] - r_mean) * (r[i] - r_mean);
    sru += (r[i] - r_mean) * (u[i] - u_mean);
  }
  const double c1 = sru / srr;
  if (!(c1 > 0.0)) throw NumericalAbort("zero-energy solution has non-positive asymptotic slope");

  double slope_dev = 0.0;
  for (Eigen::Index i = 0; i < total; ++i)
    if (r[i] >= window_start) slope_dev = std::max(slope_dev, std::abs(du[i] / c1 - 1.0));
  if (slope_dev > 1e-6) {
    std::ostringstream msg;
    msg << "no linear asymptote: |u'/slope - 1| reaches " << slope_dev
        << " over the last 20% of [0, " << r_max << "]; increase r_max beyond the potential's range";
    throw NumericalAbort(msg.str());
  }

  ScatteringSolution sol;
  sol.radial_grid = r;
  sol.a0 = r_mean - u_mean / c1;
  sol.slope_deviation = slope_dev;
  sol.segment_bounds = bounds;
  sol.f_samples.resize(total);
  sol.f_samples[0] = du[0] / c1;
  for (Eigen::Index i = 1; i < total; ++i) sol.f_samples[i] = u[i] / (c1 * r[i]);

  // Five-point defect inside each segment.
  double residual = 0.0;
  for (size_t s = 0; s + 1 < bounds.size(); ++s) {
    const Eigen::Index lo = bounds[s], hi = bounds[s + 1];
    if (hi - lo < 4) continue;
    const double h = r[lo + 1] - r[lo];
    for (Eigen::Index i = lo + 2; i <= hi - 2; ++i) {
      const double d2 = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) /
                        (12.0 * h * h);
      residual = std::max(residual, std::abs(d2 - 0.5 * v(r[i]) * u[i]) / c1);
    }
  }
  sol.residual = residual;
  return sol;
}

double scattering_length_integral(const RadialPotential& v, const ScatteringSolution& sol) {
  const auto& r = sol.radial_grid;
  const auto& f = sol.f_samples;
  double fine = 0.0, coarse = 0.0;
  for (size_t s = 0; s + 1 < sol.segment_bounds.size(); ++s) {
    const Eigen::Index lo = sol.segment_bounds[s], hi = sol.segment_bounds[s + 1];
    const double a = r[lo], b = r[hi];
    const double h = (b - a) / static_cast<double>(hi - lo);
    std::vector<double> y(static_cast<size_t>(hi - lo + 1));
    for (Eigen::Index i = lo; i <= hi; ++i) y[i - lo] = r[i] * r[i] * inside(v, r[i], a, b) * f[i];
    fine += simpson(y, h, 1);
    coarse += simpson(y, h, 2);
  }
  fine *= 0.5;
  coarse *= 0.5;
  if (std::abs(fine - coarse) > 1e-7 * std::abs(fine) + 1e-14) {
    std::ostringstream msg;
    msg << "scattering-length quadrature not converged under step halving: " << fine << " vs "
        << coarse;
    throw NumericalAbort(msg.str());
  }
  return fine;
}

ScatteringSolution solve_scaled(const RadialPotential& v, int n_particles,
                                const ScatteringOptions& opts) {
  const RadialPotential vn = scale_to_particle_number(v, n_particles);
  return solve_zero_energy(vn, opts.scaled_down(n_particles));
}

double scaled_scattering_length(const RadialPotential& v, int n_particles,
                                const ScatteringOptions& opts) {
  return solve_scaled(v, n_particles, opts).a0;
}

Series scattering_table(const RadialPotential& v, const ScatteringSolution& sol) {
  Series s({"r", "f", "V"});
  for (Eigen::Index i = 0; i < sol.radial_grid.size(); ++i)
    s.add_row({sol.radial_grid[i], sol.f_samples[i], v(sol.radial_grid[i])});
  return s;
}

} // namespace effdyn
