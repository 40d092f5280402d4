#pragma once

// Trap potentials, rotation and the one-particle Hamiltonian
//   H0 = -Delta + V(x) - Omega . L,   L = -i x ^ grad,
// in units hbar = 2m = 1.

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rotbec/eigensolver.hpp"
#include "rotbec/lattice.hpp"

namespace rotbec {

enum class TrapKind { harmonic, quartic, sampled };

/// harmonic: V = sum nu_i^2 x_i^2
/// quartic:  V = sum nu_i^2 x_i^2 + lambda |x|^4   (lambda > 0)
/// sampled:  V given pointwise on the model grid
struct Trap {
  TrapKind kind = TrapKind::harmonic;
  std::vector<double> nu;
  double lambda = 0.0;
  std::vector<double> samples;

  static Trap harmonic(std::vector<double> nu);
  static Trap quartic(std::vector<double> nu, double lambda);
  static Trap sampled(std::vector<double> values);

  /// V at `x` for the analytic kinds.
  double operator()(const Point& x) const;
};

struct RotationSpec {
  std::array<double, 3> omega{0.0, 0.0, 0.0};

  static RotationSpec about_z(double omega_z) { return {{0.0, 0.0, omega_z}}; }
  double magnitude() const;
  bool is_zero() const { return omega == std::array<double, 3>{0.0, 0.0, 0.0}; }
};

/// Grid + trap + rotation + coupling g >= 0. Immutable; the trap is
/// tabulated on the grid at construction.
class ModelSpec {
 public:
  ModelSpec(Grid grid, Trap trap, RotationSpec rotation, double g);

  const Grid& grid() const { return grid_; }
  const Trap& trap() const { return trap_; }
  const RotationSpec& rotation() const { return rotation_; }
  double g() const { return g_; }
  std::span<const double> potential() const { return *potential_; }

  /// True when V is invariant under rotations about the rotation axis
  /// (the z axis when Omega = 0).
  bool axisymmetric() const;

  ModelSpec with_coupling(double g) const;
  ModelSpec with_rotation(RotationSpec rotation) const;

 private:
  Grid grid_;
  Trap trap_;
  RotationSpec rotation_;
  double g_;
  std::shared_ptr<const std::vector<double>> potential_;
};

struct Stability {
  bool stable = true;
  std::vector<double> witness;  // grid point where confinement fails
  explicit operator bool() const { return stable; }
};

/// Confinement test for V - |Omega ^ x|^2 / 4.
/// Harmonic traps use the closed form (the quadratic form must be positive
/// definite); quartic traps are always stable; sampled traps use a
/// boundary-shell heuristic: the minimum over the outer `shell` layers of the
/// box must exceed the value at the centre by `margin`.
Stability check_stability(const Trap& trap, const RotationSpec& rotation, const Grid& grid,
                          double margin = 1.0, int shell = 2);
Stability check_stability(const ModelSpec& spec);
/// Throws Unstable carrying the witness point.
void require_stable(const ModelSpec& spec);

/// Applies H0 to fields on the model grid. Holds FFT scratch space, so one
/// instance per thread.
class Hamiltonian {
 public:
  explicit Hamiltonian(const ModelSpec& spec);

  void apply(std::span<const cplx> in, std::span<cplx> out);
  Field apply(const Field& phi);

  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  std::vector<cplx> spectrum_;
  std::vector<cplx> scratch_;
  // Omega ^ x per axis, tabulated on the grid (empty when that term vanishes).
  std::array<std::vector<double>, 3> drift_;
};

Field apply_h0(const ModelSpec& spec, const Field& phi);

/// <phi| Omega . L |phi> with spectral derivatives.
cplx angular_momentum_expectation(const ModelSpec& spec, const Field& phi);

struct Eigenpair {
  double energy;
  Field field;
};

/// m <= 16 lowest eigenpairs of the discretized H0, L2-normalized fields,
/// ascending energies. Throws Unstable or NoConvergence.
std::vector<Eigenpair> lowest_eigenpairs(const ModelSpec& spec, int m,
                                         const EigenOptions& opts = {});

/// Kinetic preconditioner (sigma - Delta)^{-1} applied in place.
void apply_kinetic_preconditioner(const Grid& grid, double sigma, std::span<cplx> values);

}  // namespace rotbec
