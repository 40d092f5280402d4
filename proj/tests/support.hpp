#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "rotbec/lattice.hpp"
#include "rotbec/model.hpp"

namespace rotbec::testing {

inline constexpr double pi = std::numbers::pi;

/// Random low-order polynomial times exp(-|x|^2/2): band-limited on any
/// reasonable grid and negligible at the box edge.
inline Field smooth_field(const Grid& grid, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  cplx c[5][5];
  for (auto& row : c)
    for (auto& v : row) v = cplx(n(rng), n(rng));
  Field f = Field::from_function(grid, [&](const Point& p) {
    cplx s = 0.0;
    for (int a = 0; a < 5; ++a)
      for (int b = 0; a + b < 5; ++b) s += c[a][b] * std::pow(p[0], a) * std::pow(p[1], b);
    return s * std::exp(-0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  });
  f *= 1.0 / f.norm();
  return f;
}

/// Noisy random field: complex noise times a Gaussian envelope, normalized.
inline Field random_field(const Grid& grid, unsigned seed, double envelope = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Field f = Field::from_function(grid, [&](const Point& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    return std::exp(-envelope * r2) * cplx(n(rng), n(rng));
  });
  f *= 1.0 / f.norm();
  return f;
}

inline ModelSpec harmonic2d(double half_width, int points, double omega_z, double g, double nu = 1.0) {
  return ModelSpec(Grid::cube(2, half_width, points), Trap::harmonic({nu, nu}),
                   RotationSpec::about_z(omega_z), g);
}

/// pi^{-d/4} exp(-|x|^2/2)
inline Field oscillator_ground(const Grid& grid) {
  const double c = std::pow(pi, -0.25 * grid.dim());
  return Field::from_function(grid, [&](const Point& p) {
    return cplx(c * std::exp(-0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])), 0.0);
  });
}

/// (x + i s y)^|q| exp(-|x|^2/2), s = sign q, normalized.
inline Field winding_field(const Grid& grid, int q) {
  const double s = q < 0 ? -1.0 : 1.0;
  Field f = Field::from_function(grid, [&](const Point& p) {
    return std::pow(cplx(p[0], s * p[1]), std::abs(q)) *
           std::exp(-0.5 * (p[0] * p[0] + p[1] * p[1]));
  });
  f *= 1.0 / f.norm();
  return f;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace rotbec::testing
