#pragma once

// Phase-winding vortex detection, angular momentum, and measures of broken
// rotational symmetry for converged states.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rotbec/gp.hpp"
#include "rotbec/lattice.hpp"
#include "rotbec/model.hpp"

namespace rotbec {

struct Vortex {
  double x = 0.0;  // plaquette centre
  double y = 0.0;
  int winding = 0;
};

struct VortexReport {
  std::vector<Vortex> vortices;
  int total_winding = 0;
  double lz_expectation = 0.0;
  double density_floor_used = 0.0;

  /// Vortices of the given winding.
  std::size_t count(int winding) const;
};

/// Re <phi| L_z |phi>, L_z = -i (x d/dy - y d/dx), spectral derivatives.
double angular_momentum_z(const Field& phi);

/// Plaquettes whose four corner densities all exceed `floor` (default
/// 1e-6 of the maximum density) and around which the wrapped phase
/// differences add up to a nonzero multiple of 2 pi. Plaquettes wrap across
/// the periodic box edge. A core sitting on a node below the floor is
/// found from the ring of its eight neighbours. Three-dimensional fields
/// are examined on the z = 0 plane.
VortexReport detect_vortices(const Field& phi, std::optional<double> floor = std::nullopt);

/// ||rho - rho_avg||_1 / ||rho||_1 with rho_avg the average of rho over
/// circles about the rotation axis (the column density is used in 3D).
/// Throws NotAxisymmetricTrap.
double symmetry_breaking_metric(const Field& phi, const ModelSpec& spec);

/// Density averaged over circles centred on the z axis, sampled at `radii`
/// (exact for the trigonometric interpolant of the grid density).
std::vector<double> ring_average(const Grid& grid, std::span<const double> density,
                                 std::span<const double> radii);

struct SymmetryReport {
  /// Metric of the lowest-energy result; empty for non-axisymmetric traps.
  std::optional<double> azimuthal_deviation;
  std::size_t n_distinct_minimizers = 0;
  /// Upper triangle (i < j) over the results inside the energy window.
  std::vector<double> pairwise_density_distances;
  /// Cluster index per input result (-1 outside the energy window or not
  /// converged).
  std::vector<int> cluster_of;
};

/// L1 distance of the two densities.
double density_distance(const Field& a, const Field& b);

/// Clusters the converged results lying within `energy_tol` of the best by
/// density distance (single linkage at `distance_tol`).
SymmetryReport minimizer_family_analysis(const ModelSpec& spec,
                                         const std::vector<GPResult>& results,
                                         double energy_tol = 1e-6, double distance_tol = 1e-3);

/// 16-bit PGM of |phi|^2 (scaled to its maximum) and of arg phi on [-pi, pi]
/// (the z = 0 plane of 3D fields).
void write_density_image(const std::filesystem::path& path, const Field& phi,
                         const std::string& comment = {});
void write_phase_image(const std::filesystem::path& path, const Field& phi,
                       const std::string& comment = {});

}  // namespace rotbec
