#pragma once

// Preconditioned gradient flow for functionals of the form
//
//   E[psi_1..psi_n] = sum_i <psi_i|H0|psi_i> + 4 pi g  integral rho^2,
//   rho = sum_i |psi_i|^2,
//
// on the unit sphere sum_i ||psi_i||^2 = 1. With n = 1 this is the GP
// functional; with n > 1 it is the density-matrix functional evaluated on
// gamma = sum_i |psi_i><psi_i|.

#include <cstddef>
#include <functional>
#include <vector>

#include "rotbec/lattice.hpp"
#include "rotbec/model.hpp"

namespace rotbec {

struct FlowOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200000;
  /// Recompute H0 psi from scratch this often (it is otherwise updated
  /// linearly along the search geodesic).
  int refresh_every = 25;
  /// Use Polak-Ribiere conjugate directions; plain preconditioned descent
  /// when false.
  bool conjugate = true;
  /// Optional linear projection commuting with the functional's gradient
  /// (e.g. onto a rotation sector). Applied to the state and directions.
  std::function<void(Field&)> constrain;
};

struct FlowResult {
  std::vector<Field> columns;
  double energy = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes from `initial` (normalized internally). Accepted steps never
/// increase the energy; this is checked on every step.
FlowResult sphere_flow(const ModelSpec& spec, std::vector<Field> initial,
                       const FlowOptions& opts);

/// Energy of the block (no normalization check).
double block_energy(const ModelSpec& spec, const std::vector<Field>& columns);

}  // namespace rotbec
