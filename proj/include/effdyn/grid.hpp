#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <optional>

namespace effdyn {

using Complex = std::complex<double>;

/// Periodic box [-L/2, L/2)^d sampled with n points per axis. Flat indices are
/// row-major with the first axis slowest.
class GridSpec {
public:
  GridSpec(int dimension, int points_per_axis, double box_length);

  int dimension() const { return dimension_; }
  int points_per_axis() const { return points_; }
  double box_length() const { return length_; }
  double spacing() const { return length_ / points_; }
  Eigen::Index size() const { return size_; }
  double cell_volume() const;
  double volume() const;

  /// Coordinate of grid index j along one axis.
  double coordinate(int j) const { return -0.5 * length_ + j * spacing(); }
  /// Signed discrete frequency of FFT index j along one axis (units 1/length).
  double frequency(int j) const;
  /// Signed displacement j*h wrapped into [-L/2, L/2).
  double wrapped_displacement(int j) const;

  std::array<int, 3> axis_indices(Eigen::Index flat) const;
  std::array<double, 3> position(Eigen::Index flat) const;
  std::array<double, 3> wavevector(Eigen::Index flat) const;
  std::array<double, 3> displacement(Eigen::Index flat) const;

  /// |xi|^2 for every spectral index.
  Eigen::ArrayXd frequency_squared() const;
  double max_frequency_squared() const;

  bool operator==(const GridSpec&) const = default;

private:
  int dimension_;
  int points_;
  double length_;
  Eigen::Index size_;
};

/// Complex wave function sampled on a grid. L2 norms use the cell volume as
/// quadrature weight, so a normalized field satisfies h^d sum |f|^2 = 1.
struct Field {
  GridSpec grid;
  Eigen::VectorXcd values;

  explicit Field(const GridSpec& g);
  Field(const GridSpec& g, Eigen::VectorXcd v);

  static Field from_function(const GridSpec& g,
                             const std::function<Complex(const std::array<double, 3>&)>& fn);
};

/// Unitary DFT coefficients of a Field, indexed like the grid.
struct SpectralField {
  GridSpec grid;
  Eigen::VectorXcd values;

  explicit SpectralField(const GridSpec& g);
  SpectralField(const GridSpec& g, Eigen::VectorXcd v);
};

/// Real-valued grid function (densities, potentials).
struct RealField {
  GridSpec grid;
  Eigen::ArrayXd values;

  RealField(const GridSpec& g, Eigen::ArrayXd v);
};

SpectralField transform_forward(const Field& f);
Field transform_inverse(const SpectralField& spectrum);

/// Diagonal Fourier-space operator.
class Multiplier {
public:
  enum class Kind { laplacian, semirelativistic, sobolev_quarter, sobolev_half, coulomb3d, custom };

  static Multiplier laplacian() { return Multiplier(Kind::laplacian); }
  static Multiplier semirelativistic() { return Multiplier(Kind::semirelativistic); }
  static Multiplier sobolev_quarter() { return Multiplier(Kind::sobolev_quarter); }
  static Multiplier sobolev_half() { return Multiplier(Kind::sobolev_half); }
  /// 4 pi / |xi|^2. The zero mode has no natural value and must be declared.
  static Multiplier coulomb3d(std::optional<double> zero_mode);
  static Multiplier custom(Eigen::ArrayXd samples);

  Kind kind() const { return kind_; }

  /// Value of an analytic multiplier at |xi|^2. Not defined for custom tables.
  double value(double xi_squared) const;
  /// Samples on the grid's spectral indices.
  Eigen::ArrayXd samples(const GridSpec& g) const;

private:
  explicit Multiplier(Kind k) : kind_(k) {}

  Kind kind_;
  std::optional<double> zero_mode_;
  Eigen::ArrayXd table_;
};

Field apply_multiplier(const Field& f, const Multiplier& m, Complex prefactor = 1.0);
/// Multiplies the unitary spectrum of f by per-mode factors.
Field apply_spectral_factors(const Field& f, const Eigen::ArrayXcd& factors);

/// Convolution kernel bound to a grid. Position-space kernels are sampled at
/// wrapped displacements; multiplier kernels are continuum Fourier transforms.
class KernelSpec {
public:
  static KernelSpec from_multiplier(const GridSpec& g, const Multiplier& m);
  /// Samples indexed like the grid but interpreted as displacements
  /// (flat index j <-> displacement(j)).
  static KernelSpec from_samples(const GridSpec& g, Eigen::ArrayXd samples);
  static KernelSpec radial(const GridSpec& g, const std::function<double(double)>& profile);
  /// 1/(|x| + alpha). For alpha = 0 the origin cell holds the cell average of
  /// 1/|x|, defined only for 3D grids.
  static KernelSpec regularized_coulomb(const GridSpec& g, double alpha);
  static KernelSpec zero(const GridSpec& g);

  const GridSpec& grid() const { return grid_; }
  /// Spectral factors T such that (K * rho) = IDFT(T . DFT(rho)).
  const Eigen::ArrayXcd& transfer() const { return transfer_; }
  bool is_zero() const { return (transfer_ == Complex(0.0)).all(); }

private:
  KernelSpec(const GridSpec& g, Eigen::ArrayXcd transfer) : grid_(g), transfer_(std::move(transfer)) {}

  GridSpec grid_;
  Eigen::ArrayXcd transfer_;
};

/// Average of 1/|x| over the cube [-h/2, h/2]^3 is this constant divided by h.
double cube_inverse_distance_constant();

/// Periodic convolution (kernel * density) with grid quadrature.
RealField convolve(const RealField& density, const KernelSpec& kernel);

enum class NormKind { l2, h_half, h1, kinetic_sr };

double norm(const Field& f, NormKind kind);
double l2_norm(const Field& f);
double l2_norm(const SpectralField& f);
/// Continuum inner product <f, g> with cell-volume quadrature.
Complex inner_product(const Field& f, const Field& g);
Eigen::ArrayXd density(const Field& f);

} // namespace effdyn
