#pragma once

// Gross-Pitaevskii functional
//   E[phi] = <phi|H0|phi> + 4 pi g integral |phi|^4,   ||phi||_2 = 1,
// its gradient, the chemical potential and a multi-start minimizer.

#include <cstdint>
#include <string>
#include <vector>

#include "rotbec/lattice.hpp"
#include "rotbec/model.hpp"

namespace rotbec {

struct GPBreakdown {
  double kinetic = 0.0;      // integral |grad phi|^2
  double potential = 0.0;   // integral V |phi|^2
  double rotational = 0.0;   // -<phi|Omega.L|phi>
  double interaction = 0.0;  // 4 pi g integral |phi|^4
  double total = 0.0;
};

struct GPResult {
  explicit GPResult(Field phi) : phi(std::move(phi)) {}

  Field phi;
  double energy = 0.0;
  double mu = 0.0;
  GPBreakdown breakdown;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts_used = 0;
  bool converged = false;
  /// "noise:<seed>", "vortex:<q>", "sector:<q>" or "given".
  std::string origin;
};

struct GPOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200000;
  /// Random starts; the vortex-seeded starts q = 0..max_seed_winding come on top.
  int restarts = 4;
  std::uint64_t seed = 1;
  bool vortex_seeds = true;
  int max_seed_winding = 3;
};

/// Term-by-term energy. Throws NotNormalized unless | ||phi|| - 1 | <= 1e-8.
GPBreakdown gp_energy(const ModelSpec& spec, const Field& phi);
/// The functional evaluated without the normalization check.
double gp_functional(const ModelSpec& spec, const Field& phi);
/// H0 phi + 8 pi g |phi|^2 phi (unconstrained functional derivative).
Field gp_gradient(const ModelSpec& spec, const Field& phi);
/// mu = E[phi] + 4 pi g integral |phi|^4. Throws NotNormalized.
double chemical_potential(const ModelSpec& spec, const Field& phi);

/// Complex Gaussian noise times exp(-|x|^2/2), normalized.
Field noise_seed(const Grid& grid, std::uint64_t seed);
/// (x + i y)^q exp(-|x|^2/2), normalized.
Field vortex_seed(const Grid& grid, int winding);

/// Projection onto the fields that pick up the phase (-i)^q under a
/// quarter turn about the z axis (the rotation sector of winding q mod 4).
Field project_rotation_sector(const Field& phi, int winding);

/// One descent from `initial`. Never throws NoConvergence; check `converged`.
GPResult minimize_gp_from(const ModelSpec& spec, const Field& initial, const GPOptions& opts,
                          std::string origin = "given");
/// Every restart, in the order noise seeds then vortex seeds.
std::vector<GPResult> minimize_gp_runs(const ModelSpec& spec, const GPOptions& opts);
/// Lowest-energy converged run with restarts_used = runs.size().
/// Throws NoConvergence when none converged.
GPResult best_run(const std::vector<GPResult>& runs);
/// Lowest converged energy over all restarts. Throws Unstable, NoConvergence.
GPResult minimize_gp(const ModelSpec& spec, const GPOptions& opts = {});
/// Minimization restricted to a rotation sector, seeded by the winding-q
/// vortex; the axisymmetric reference candidates.
GPResult minimize_gp_in_sector(const ModelSpec& spec, int winding, const GPOptions& opts = {});

/// Runs whose energy lies within `energy_tol` of the best converged run.
std::vector<GPResult> lowest_energy_family(const std::vector<GPResult>& runs,
                                           double energy_tol);

}  // namespace rotbec
