#pragma once

// Block eigensolver for the low end of the spectrum of a Hermitian operator
// given only through its action on blocks of column vectors.

#include <Eigen/Dense>
#include <functional>

namespace rotbec {

using Block = Eigen::MatrixXcd;
/// out = Op(in), column by column; `out` is pre-sized like `in`.
using BlockOperator = std::function<void(const Block& in, Block& out)>;

struct EigenOptions {
  /// Converged when ||A x - theta x|| <= tol for unit x.
  double tol = 1e-8;
  int max_iter = 3000;
};

struct EigenResult {
  Eigen::VectorXd values;    // ascending, `wanted` entries
  Block vectors;             // unit columns, Euclidean inner product
  Eigen::VectorXd residuals;
  int iterations = 0;
};

/// Locally optimal block preconditioned conjugate gradient (LOBPCG).
///
/// `initial` supplies the search block; it should have a few more columns
/// than `wanted` for robust convergence near degenerate levels. When
/// `constraints` is non-null the search is restricted to the orthogonal
/// complement of its (orthonormal) columns. Throws NoConvergence.
EigenResult lobpcg(const BlockOperator& apply, const BlockOperator& precondition,
                   Block initial, int wanted, const EigenOptions& opts = {},
                   const Block* constraints = nullptr);

/// Orthonormalizes the columns of `v` against the orthonormal columns of `q`
/// and among themselves (two-pass Gram-Schmidt), dropping columns that are
/// numerically dependent. Returns the surviving columns.
Block orthonormalize(const Block& v, const Block* q = nullptr);

}  // namespace rotbec
