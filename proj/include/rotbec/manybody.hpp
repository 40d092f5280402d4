#pragma once

// Truncated second-quantized Hamiltonian
//   H = sum_j e_j a_j^+ a_j + 1/2 sum W_ijkl a_i^+ a_j^+ a_l a_k
// on M one-particle modes, exact ground states for N bosons, the reduced
// one-particle density matrix, the unsymmetrized ("absolute") ground state,
// and numerical checks of coherent-state identities.

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "rotbec/lattice.hpp"
#include "rotbec/model.hpp"

namespace rotbec {

/// W_ijkl = <phi_i (x) phi_j| v |phi_k (x) phi_l>, stored at ((i M + j) M + k) M + l.
struct FockProblem {
  int modes = 1;
  int particles = 1;
  std::vector<double> energies;
  std::vector<cplx> w;

  cplx& W(int i, int j, int k, int l) { return w[index(i, j, k, l)]; }
  cplx W(int i, int j, int k, int l) const { return w[index(i, j, k, l)]; }
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * modes + j) * modes + k) * modes + l;
  }
  /// Largest violation of W_ijkl = W_jilk and W_ijkl = conj(W_klij).
  double symmetry_defect() const;
};

/// Throws InvalidState (bad sizes, M > 6, N > 10, asymmetric W) or
/// DimensionTooLarge (more than 1e5 occupation states).
void validate(const FockProblem& p);

/// Number of occupation patterns of N bosons in M modes.
std::size_t bosonic_dimension(int modes, int particles);

/// Occupation vectors summing to N, in lexicographic order.
std::vector<std::vector<int>> occupation_basis(int modes, int particles);

struct FockResult {
  double e0 = 0.0;
  /// gamma1(j, k) = <a_k^+ a_j>
  Eigen::MatrixXcd gamma1;
  double condensate_fraction = 0.0;
  double residual = 0.0;
  Eigen::VectorXcd ground_vector;
};

/// Ground state in the N-boson occupation basis. Throws NoConvergence.
FockResult ground_state_bosonic(const FockProblem& p);

/// Lowest eigenvalue of the same Hamiltonian on the full M^N tensor power
/// (no exchange symmetry imposed). Throws DimensionTooLarge for M^N > 1e4.
double ground_state_absolute(const FockProblem& p);

/// Pair interaction used for W: none, the contact surrogate 8 pi a delta,
/// or a^-2 w(x / a) with w the Gaussian of unit scattering length.
struct PairPotential {
  enum class Kind { none, contact, gaussian } kind = Kind::none;
  double a = 0.0;

  static PairPotential none() { return {}; }
  static PairPotential contact(double a) { return {Kind::contact, a}; }
  static PairPotential gaussian(double a) { return {Kind::gaussian, a}; }
};

/// Amplitude A with scattering_length(A exp(-r^2)) = 1.
double unit_gaussian_amplitude();

/// Quadrature of W over the grid; Gaussian potentials by spectral
/// convolution. The result is symmetrized.
std::vector<cplx> build_w_tensor(const std::vector<Field>& modes, const PairPotential& v);

/// Bundles mode energies and W into a problem.
FockProblem make_problem(const std::vector<Eigenpair>& modes, int particles,
                         const PairPotential& v);

/// min over unit c in C^M of sum e_j |c_j|^2 + 4 pi g integral |sum c_j phi_j|^4.
double truncated_gp_energy(const std::vector<Eigenpair>& modes, double g);

struct ScanRow {
  int n = 0;
  double a = 0.0;
  double e0_over_n = 0.0;
  double e_gp_truncated = 0.0;
  double condensate_fraction = 0.0;
  std::optional<double> e_abs;
};

/// For each N: a = g / N, contact interaction in the lowest M modes of H0.
/// The absolute energy is added when requested and M^N <= 1e4.
std::vector<ScanRow> gp_limit_scan(const ModelSpec& spec, int modes, double g,
                                   const std::vector<int>& n_list, bool with_absolute = false,
                                   const PairPotential::Kind kind = PairPotential::Kind::contact);

struct CoherentReport {
  cplx mean_a;
  double mean_number = 0.0;
  double norm = 0.0;
  /// Operator-norm deviations on span{n <= n_max}.
  double completeness_error = 0.0;   // integral |z><z| - 1
  double upper_symbol_error = 0.0;   // integral (|z|^2 - 1)|z><z| - a^+ a
  double weighted_error = 0.0;       // integral |z|^2 |z><z| - (a^+ a + 1)
};

/// Truncated coherent vector e^{-|z|^2/2} z^n / sqrt(n!), n < dimension.
Eigen::VectorXcd coherent_vector(int dimension, cplx z);

/// Checks with a midpoint rule in |z| <= radius (`radial` points) and a
/// uniform angular rule (`angular` points), measure dx dy / pi.
CoherentReport coherent_state_checks(int dimension, cplx z, double radius, int n_max,
                                     int radial = 128, int angular = 256);

}  // namespace rotbec
