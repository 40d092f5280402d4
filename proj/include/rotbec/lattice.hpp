#pragma once

// Periodic Cartesian grids in two or three dimensions, complex fields living
// on them, quadrature and plane-wave spectral differentiation.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace rotbec {

using cplx = std::complex<double>;
using Point = std::array<double, 3>;

/// Box [-L, L) per axis sampled with an even number n >= 8 of points,
/// spacing 2L/n. Copies are cheap and share the FFT plans.
class Grid {
 public:
  Grid(int dim, std::vector<double> half_width, std::vector<int> points);

  /// Same extent and resolution on every axis.
  static Grid cube(int dim, double half_width, int points);

  int dim() const { return dim_; }
  int points(int axis) const { return points_[axis]; }
  double half_width(int axis) const { return half_width_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t size() const { return size_; }

  double cell_volume() const;
  double volume() const;

  /// One-dimensional coordinate samples along `axis`, x_i = -L + i h.
  std::span<const double> coordinates(int axis) const;
  /// Spectral frequencies along `axis` in FFT order, k = pi m / L.
  std::span<const double> wavenumbers(int axis) const;
  /// |k|^2 for every spectral index (row-major, last axis fastest).
  std::span<const double> k_squared() const;

  /// Row-major strides: index = sum_a i_a * stride(a).
  std::size_t stride(int axis) const { return strides_[axis]; }
  std::array<int, 3> unravel(std::size_t index) const;
  Point point(std::size_t index) const;
  /// As point(), except that the first sample on each axis (-L, which is
  /// also +L on the periodic box) reads 0, so x -> -x maps the samples
  /// onto themselves. Used for coordinate factors in x ^ grad.
  Point odd_point(std::size_t index) const;

  /// Unnormalized forward DFT. `in` and `out` may alias.
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  /// Inverse DFT scaled by 1/size so forward∘backward is the identity.
  void backward(std::span<const cplx> in, std::span<cplx> out) const;

  bool operator==(const Grid& other) const;

 private:
  struct Spectral;

  int dim_;
  std::array<double, 3> half_width_{};
  std::array<int, 3> points_{1, 1, 1};
  std::array<double, 3> spacing_{};
  std::array<std::size_t, 3> strides_{};
  std::size_t size_ = 0;
  std::shared_ptr<const Spectral> spectral_;
};

/// Complex amplitude per grid point.
class Field {
 public:
  explicit Field(Grid grid);
  Field(Grid grid, std::vector<cplx> values);

  template <class Fn>
  static Field from_function(const Grid& grid, Fn&& fn) {
    Field f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values_[i] = fn(grid.point(i));
    return f;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }
  cplx& operator[](std::size_t i) { return values_[i]; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(cplx s);
  /// this += s * other
  Field& axpy(cplx s, const Field& other);

  /// sum |phi|^2 times the cell volume.
  double norm_squared() const;
  double norm() const;
  /// |phi|^2 per grid point.
  std::vector<double> density() const;
  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx s, Field a);

/// <a|b> = integral conj(a) b.
cplx inner(const Field& a, const Field& b);

/// Rectangle-rule integral of a real density sampled on `grid`.
double integrate(const Grid& grid, std::span<const double> density);

/// d phi / d x_axis via multiplication by i k; the Nyquist mode is dropped.
Field gradient_spectral(const Field& phi, int axis);
/// Delta phi (note the sign: callers negate for the kinetic energy).
Field laplacian_spectral(const Field& phi);

/// Discrete Parseval pair: integral |phi|^2 evaluated from the spectral
/// coefficients of `phi`.
double spectral_norm_squared(const Field& phi);

/// Rotation of the field by +90 degrees about the z axis,
/// result(x, y) = phi(y, -x). Requires equal extent on the first two axes.
Field rotate_quarter_turn(const Field& phi);

}  // namespace rotbec
