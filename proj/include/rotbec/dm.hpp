#pragma once

// Density-matrix functional
//   E[gamma] = Tr[H0 gamma] + 4 pi g integral rho_gamma^2,
//   gamma = sum_i w_i |phi_i><phi_i|,  w on the simplex,
// restricted to rank <= n, and its minimization.

#include <cstdint>
#include <optional>
#include <vector>

#include "rotbec/gp.hpp"
#include "rotbec/lattice.hpp"
#include "rotbec/model.hpp"

namespace rotbec {

struct DMState {
  std::vector<Field> orbitals;  // orthonormal
  std::vector<double> weights;  // nonnegative, summing to 1

  std::size_t rank() const { return orbitals.size(); }
  /// sum w_i |phi_i|^2
  std::vector<double> density() const;
};

struct DMOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200000;
  /// Outer alternations between the orbital flow and the weight update.
  int max_alternations = 2000;
  /// Flow iterations between weight updates.
  std::size_t flow_chunk = 200;
  /// Used for the GP warm start when no initial state is supplied.
  GPOptions gp;
};

struct DMResult {
  DMState state;
  double energy = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  int alternations = 0;
  /// <phi_i|H0|phi_i> per orbital.
  std::vector<double> orbital_h0;
};

/// Throws InvalidState unless the orbitals are orthonormal to 1e-10 and the
/// weights lie on the simplex to 1e-12.
void validate(const DMState& state);

/// Throws InvalidState.
double dm_energy(const ModelSpec& spec, const DMState& state);

/// Minimum of the quadratic  h.w + w^T Q w  over the probability simplex,
/// by accelerated projected gradient. `q` is n x n row-major, symmetric PSD.
std::vector<double> minimize_on_simplex(const std::vector<double>& h,
                                        const std::vector<double>& q,
                                        std::vector<double> start, double tol = 1e-12);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

/// Minimizer over density matrices of rank <= n (1 <= n <= 8). Starts from
/// `initial` when given (padded with unoccupied orbitals if its rank is
/// below n), otherwise from the GP minimizer. The energy never rises above
/// that of the start. Throws Unstable, NoConvergence.
DMResult minimize_dm(const ModelSpec& spec, int n, const DMOptions& opts = {},
                     const std::optional<DMState>& initial = std::nullopt);

}  // namespace rotbec
