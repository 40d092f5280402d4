#pragma once

// Zero-energy s-wave scattering lengths of radial pair potentials.
//
// The reduced two-body equation in units hbar = 2m = 1 reads
//   u''(r) = v(r) u(r) / 2,   u(0) = 0,
// and outside the range u is proportional to r - a.

#include <string>
#include <vector>

namespace rotbec {

enum class PotentialKind { hard_sphere, square_well, gaussian, soft_shell };

struct RadialPotential {
  PotentialKind kind = PotentialKind::hard_sphere;
  /// square_well: height inside the radius (negative for a well);
  /// gaussian: amplitude; soft_shell: multiple of the unit-integral shell.
  double strength = 0.0;
  /// hard sphere / square well radius, gaussian width, outer shell radius.
  double radius = 0.0;
  /// soft_shell only.
  double inner_radius = 0.0;

  static RadialPotential hard_sphere(double radius);
  static RadialPotential square_well(double height, double radius);
  /// amplitude * exp(-r^2 / width^2)
  static RadialPotential gaussian(double amplitude, double width);
  /// multiplier * C sin^2(pi (r - r0) / (r1 - r0)) on [r0, r1], C chosen so
  /// the unit shell integrates to 4 pi over space.
  static RadialPotential soft_shell(double inner_radius, double outer_radius,
                                    double multiplier = 1.0);

  /// Value at distance r (infinite inside a hard sphere).
  double operator()(double r) const;
  /// Distance beyond which the potential vanishes or stays below 1e-14.
  double range() const;
  std::string name() const;
};

/// Throws NonFiniteScatteringLength when the zero-energy solution has a
/// node (a bound state) or a flat asymptote.
double scattering_length(const RadialPotential& v);

/// a^-2 w(x / a).
RadialPotential scale_potential(const RadialPotential& w, double a);
/// c w(x) (not defined for hard spheres).
RadialPotential multiply_potential(const RadialPotential& w, double c);

/// integral of v over three-dimensional space, by adaptive quadrature.
double volume_integral(const RadialPotential& v);

struct BornRow {
  double a = 0.0;
  double s_of_a = 0.0;        // scattering length of 2 a U
  double rel_deviation = 0.0;  // |s - a| / a (0 at a = 0)
};

/// Scattering lengths of 2 a U against the first-order value a.
std::vector<BornRow> born_check(const RadialPotential& shell, const std::vector<double>& a_list);

}  // namespace rotbec
