#include "rotbec/eigensolver.hpp"

#include <algorithm>
#include <cmath>

#include "rotbec/errors.hpp"

namespace rotbec {

namespace {

void project_out(Block& v, const Block& q) {
  if (q.cols() == 0 || v.cols() == 0) return;
  v.noalias() -= q * (q.adjoint() * v);
}

Block hstack(const Block& a, const Block& b) {
  Block out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

Block orthonormalize(const Block& v, const Block* q) {
  Block work = v;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < work.cols(); ++j) {
    auto col = work.col(j);
    const double original = col.norm();
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (q && q->cols() > 0) col -= *q * (q->adjoint() * col);
      for (Eigen::Index k : kept) col -= work.col(k) * work.col(k).dot(col);
    }
    const double nrm = col.norm();
    if (nrm <= 1e-10 * original) continue;
    col /= nrm;
    kept.push_back(j);
  }
  Block out(v.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out.col(i) = work.col(kept[i]);
  return out;
}

EigenResult lobpcg(const BlockOperator& apply, const BlockOperator& precondition,
                   Block initial, int wanted, const EigenOptions& opts,
                   const Block* constraints) {
  const Eigen::Index rows = initial.rows();
  Block x = orthonormalize(initial, constraints);
  if (x.cols() < wanted) throw InvalidState("lobpcg: initial block is rank deficient");
  const Eigen::Index k = x.cols();

  Block ax(rows, k);
  apply(x, ax);
  {
    Eigen::MatrixXcd h = x.adjoint() * ax;
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
  }

  Block p(rows, 0);
  Eigen::VectorXd theta(k);
  EigenResult result;
  for (int it = 0; it <= opts.max_iter; ++it) {
    for (Eigen::Index j = 0; j < k; ++j) theta(j) = x.col(j).dot(ax.col(j)).real();
    Block r = ax - x * theta.asDiagonal();
    if (constraints) project_out(r, *constraints);
    Eigen::VectorXd res = r.colwise().norm();

    if (res.head(wanted).maxCoeff() <= opts.tol) {
      // Verify against a fresh application; ax is carried by recurrences.
      apply(x, ax);
      for (Eigen::Index j = 0; j < k; ++j) theta(j) = x.col(j).dot(ax.col(j)).real();
      r = ax - x * theta.asDiagonal();
      if (constraints) project_out(r, *constraints);
      res = r.colwise().norm();
      if (res.head(wanted).maxCoeff() <= opts.tol) {
        result.values = theta.head(wanted);
        result.vectors = x.leftCols(wanted);
        result.residuals = res.head(wanted);
        result.iterations = it;
        return result;
      }
    }
    if (it == opts.max_iter) break;

    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < k; ++j)
      if (res(j) > 0.1 * opts.tol) active.push_back(j);
    Block ra(rows, static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) ra.col(i) = r.col(active[i]);

    Block w(rows, ra.cols());
    if (precondition) {
      precondition(ra, w);
    } else {
      w = ra;
    }
    if (constraints) project_out(w, *constraints);

    Block basis_q = constraints ? hstack(*constraints, x) : x;
    Block s = orthonormalize(w, &basis_q);
    if (p.cols() > 0) {
      if (constraints) project_out(p, *constraints);
      Block q2 = hstack(basis_q, s);
      Block ps = orthonormalize(p, &q2);
      s = hstack(s, ps);
    }
    if (s.cols() == 0) break;

    Block as(rows, s.cols());
    apply(s, as);

    Block full = hstack(x, s);
    Block afull = hstack(ax, as);
    Eigen::MatrixXcd h = full.adjoint() * afull;
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::MatrixXcd c = es.eigenvectors().leftCols(k);

    p = s * c.bottomRows(s.cols());
    x = full * c;
    ax = afull * c;
  }
  throw NoConvergence("lobpcg", static_cast<std::size_t>(opts.max_iter));
}

}  // namespace rotbec
