#include "effdyn/grid.hpp"

#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

namespace effdyn {

namespace detail {

namespace {

// fftw planning is not thread-safe; execution with new arrays is.
struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

fftw_plan plan_for(const GridSpec& g, int sign) {
  auto& cache = plan_cache();
  std::lock_guard lock(cache.mutex);
  const auto key = std::make_tuple(g.dimension(), g.points_per_axis(), sign);
  if (auto it = cache.plans.find(key); it != cache.plans.end()) return it->second;

  int dims[3] = {g.points_per_axis(), g.points_per_axis(), g.points_per_axis()};
  auto* scratch = fftw_alloc_complex(static_cast<size_t>(g.size()));
  fftw_plan plan = fftw_plan_dft(g.dimension(), dims, scratch, scratch, sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (plan == nullptr) throw std::runtime_error("fftw planning failed");
  cache.plans.emplace(key, plan);
  return plan;
}

} // namespace

void fft_inplace(const GridSpec& g, Eigen::VectorXcd& data, FftDirection dir) {
  if (data.size() != g.size()) throw std::invalid_argument("fft: data size does not match grid");
  const int sign = dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(g, sign), ptr, ptr);
}

} // namespace detail

using detail::FftDirection;
using detail::fft_inplace;

GridSpec::GridSpec(int dimension, int points_per_axis, double box_length)
    : dimension_(dimension), points_(points_per_axis), length_(box_length) {
  if (dimension != 1 && dimension != 3)
    throw std::invalid_argument("grid dimension must be 1 or 3, got " + std::to_string(dimension));
  if (points_per_axis < 2)
    throw std::invalid_argument("grid needs at least 2 points per axis");
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw std::invalid_argument("grid box length must be positive and finite");
  size_ = 1;
  for (int a = 0; a < dimension; ++a) size_ *= points_per_axis;
}

double GridSpec::cell_volume() const { return std::pow(spacing(), dimension_); }

double GridSpec::volume() const { return std::pow(length_, dimension_); }

double GridSpec::frequency(int j) const {
  const int signed_index = j < (points_ + 1) / 2 ? j : j - points_;
  return 2.0 * std::numbers::pi * signed_index / length_;
}

double GridSpec::wrapped_displacement(int j) const {
  const int signed_index = j < (points_ + 1) / 2 ? j : j - points_;
  return signed_index * spacing();
}

std::array<int, 3> GridSpec::axis_indices(Eigen::Index flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dimension_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % points_);
    flat /= points_;
  }
  return idx;
}

std::array<double, 3> GridSpec::position(Eigen::Index flat) const {
  const auto idx = axis_indices(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension_; ++a) x[a] = coordinate(idx[a]);
  return x;
}

std::array<double, 3> GridSpec::wavevector(Eigen::Index flat) const {
  const auto idx = axis_indices(flat);
  std::array<double, 3> k{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension_; ++a) k[a] = frequency(idx[a]);
  return k;
}

std::array<double, 3> GridSpec::displacement(Eigen::Index flat) const {
  const auto idx = axis_indices(flat);
  std::array<double, 3> r{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension_; ++a) r[a] = wrapped_displacement(idx[a]);
  return r;
}

Eigen::ArrayXd GridSpec::frequency_squared() const {
  Eigen::ArrayXd out(size_);
  for (Eigen::Index i = 0; i < size_; ++i) {
    const auto k = wavevector(i);
    out[i] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  }
  return out;
}

double GridSpec::max_frequency_squared() const {
  const double kmax = std::numbers::pi * (points_ / 2) * 2.0 / length_;
  return dimension_ * kmax * kmax;
}

Field::Field(const GridSpec& g) : grid(g), values(Eigen::VectorXcd::Zero(g.size())) {}

Field::Field(const GridSpec& g, Eigen::VectorXcd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
}

Field Field::from_function(const GridSpec& g,
                           const std::function<Complex(const std::array<double, 3>&)>& fn) {
  Field f(g);
  for (Eigen::Index i = 0; i < g.size(); ++i) f.values[i] = fn(g.position(i));
  return f;
}

SpectralField::SpectralField(const GridSpec& g)
    : grid(g), values(Eigen::VectorXcd::Zero(g.size())) {}

SpectralField::SpectralField(const GridSpec& g, Eigen::VectorXcd v)
    : grid(g), values(std::move(v)) {
  if (values.size() != grid.size())
    throw std::invalid_argument("spectral field size does not match grid");
}

RealField::RealField(const GridSpec& g, Eigen::ArrayXd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("real field size does not match grid");
}

SpectralField transform_forward(const Field& f) {
  if (f.values.size() != f.grid.size()) throw std::invalid_argument("field size does not match grid");
  Eigen::VectorXcd data = f.values;
  fft_inplace(f.grid, data, FftDirection::forward);
  data *= 1.0 / std::sqrt(static_cast<double>(f.grid.size()));
  return SpectralField(f.grid, std::move(data));
}

Field transform_inverse(const SpectralField& spectrum) {
  if (spectrum.values.size() != spectrum.grid.size())
    throw std::invalid_argument("spectral field size does not match grid");
  Eigen::VectorXcd data = spectrum.values;
  fft_inplace(spectrum.grid, data, FftDirection::backward);
  data *= 1.0 / std::sqrt(static_cast<double>(spectrum.grid.size()));
  return Field(spectrum.grid, std::move(data));
}

Multiplier Multiplier::coulomb3d(std::optional<double> zero_mode) {
  Multiplier m(Kind::coulomb3d);
  m.zero_mode_ = zero_mode;
  return m;
}

Multiplier Multiplier::custom(Eigen::ArrayXd samples) {
  if (!samples.allFinite()) throw std::invalid_argument("custom multiplier has non-finite samples");
  Multiplier m(Kind::custom);
  m.table_ = std::move(samples);
  return m;
}

double Multiplier::value(double xi_squared) const {
  switch (kind_) {
  case Kind::laplacian:
    return xi_squared;
  case Kind::semirelativistic:
  case Kind::sobolev_half:
    return std::sqrt(1.0 + xi_squared);
  case Kind::sobolev_quarter:
    return std::pow(1.0 + xi_squared, 0.25);
  case Kind::coulomb3d:
    if (xi_squared == 0.0) {
      if (!zero_mode_) throw std::invalid_argument("coulomb3d multiplier: zero-mode value not declared");
      return *zero_mode_;
    }
    return 4.0 * std::numbers::pi / xi_squared;
  case Kind::custom:
    break;
  }
  throw std::invalid_argument("custom multiplier has no analytic value");
}

Eigen::ArrayXd Multiplier::samples(const GridSpec& g) const {
  if (kind_ == Kind::custom) {
    if (table_.size() != g.size())
      throw std::invalid_argument("custom multiplier table size does not match grid");
    return table_;
  }
  if (kind_ == Kind::coulomb3d) {
    if (!zero_mode_) throw std::invalid_argument("coulomb3d multiplier: zero-mode value not declared");
    if (g.dimension() != 3) throw std::invalid_argument("coulomb3d multiplier requires a 3D grid");
  }
  const Eigen::ArrayXd xi2 = g.frequency_squared();
  return xi2.unaryExpr([this](double v) { return value(v); });
}

Field apply_spectral_factors(const Field& f, const Eigen::ArrayXcd& factors) {
  if (factors.size() != f.grid.size()) throw std::invalid_argument("spectral factors do not match grid");
  Eigen::VectorXcd data = f.values;
  fft_inplace(f.grid, data, FftDirection::forward);
  data.array() *= factors / static_cast<double>(f.grid.size());
  fft_inplace(f.grid, data, FftDirection::backward);
  return Field(f.grid, std::move(data));
}

Field apply_multiplier(const Field& f, const Multiplier& m, Complex prefactor) {
  const Eigen::ArrayXcd factors = prefactor * m.samples(f.grid).cast<Complex>();
  return apply_spectral_factors(f, factors);
}

namespace {

Eigen::ArrayXcd position_transfer(const GridSpec& g, const Eigen::ArrayXd& samples) {
  if (samples.size() != g.size()) throw std::invalid_argument("kernel samples do not match grid");
  if (!samples.allFinite()) throw std::invalid_argument("kernel samples must be finite");
  Eigen::VectorXcd data = samples.cast<Complex>().matrix();
  fft_inplace(g, data, FftDirection::forward);
  return data.array() * g.cell_volume();
}

} // namespace

KernelSpec KernelSpec::from_multiplier(const GridSpec& g, const Multiplier& m) {
  return KernelSpec(g, m.samples(g).cast<Complex>());
}

KernelSpec KernelSpec::from_samples(const GridSpec& g, Eigen::ArrayXd samples) {
  return KernelSpec(g, position_transfer(g, samples));
}

KernelSpec KernelSpec::radial(const GridSpec& g, const std::function<double(double)>& profile) {
  Eigen::ArrayXd samples(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto r = g.displacement(i);
    samples[i] = profile(std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]));
  }
  return from_samples(g, std::move(samples));
}

double cube_inverse_distance_constant() {
  return 3.0 * std::log(2.0 + std::sqrt(3.0)) - 0.5 * std::numbers::pi;
}

KernelSpec KernelSpec::regularized_coulomb(const GridSpec& g, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("regularization alpha must be finite and non-negative");
  if (alpha == 0.0 && g.dimension() != 3)
    throw std::invalid_argument("unregularized Coulomb kernel is only defined on 3D grids");
  Eigen::ArrayXd samples(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto r = g.displacement(i);
    const double dist = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    samples[i] = 1.0 / (dist + alpha);
  }
  if (alpha == 0.0) samples[0] = cube_inverse_distance_constant() / g.spacing();
  return from_samples(g, std::move(samples));
}

KernelSpec KernelSpec::zero(const GridSpec& g) { return KernelSpec(g, Eigen::ArrayXcd::Zero(g.size())); }

RealField convolve(const RealField& density, const KernelSpec& kernel) {
  if (!(density.grid == kernel.grid())) throw std::invalid_argument("convolve: kernel grid mismatch");
  const GridSpec& g = density.grid;
  Eigen::VectorXcd data = density.values.cast<Complex>().matrix();
  fft_inplace(g, data, FftDirection::forward);
  data.array() *= kernel.transfer() / static_cast<double>(g.size());
  fft_inplace(g, data, FftDirection::backward);
  const double real_norm = data.real().norm();
  const double imag_norm = data.imag().norm();
  if (imag_norm > 1e-10 * real_norm && imag_norm > 1e-300)
    throw std::logic_error("convolve: imaginary residue above tolerance");
  return RealField(g, data.real().array());
}

double l2_norm(const Field& f) { return std::sqrt(f.grid.cell_volume() * f.values.squaredNorm()); }

double l2_norm(const SpectralField& f) {
  return std::sqrt(f.grid.cell_volume() * f.values.squaredNorm());
}

Complex inner_product(const Field& f, const Field& g) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("inner product: grid mismatch");
  return f.grid.cell_volume() * f.values.dot(g.values);
}

Eigen::ArrayXd density(const Field& f) { return f.values.array().abs2(); }

double norm(const Field& f, NormKind kind) {
  if (kind == NormKind::l2) return l2_norm(f);
  const SpectralField spectrum = transform_forward(f);
  const Eigen::ArrayXd power = spectrum.values.array().abs2();
  const Eigen::ArrayXd xi2 = f.grid.frequency_squared();
  const double w = f.grid.cell_volume();
  switch (kind) {
  case NormKind::h_half:
    return std::sqrt(w * ((1.0 + xi2).sqrt() * power).sum());
  case NormKind::h1:
    return std::sqrt(w * ((1.0 + xi2) * power).sum());
  case NormKind::kinetic_sr:
    return w * ((1.0 + xi2).sqrt() * power).sum();
  case NormKind::l2:
    break;
  }
  return l2_norm(f);
}

} // namespace effdyn
