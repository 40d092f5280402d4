#include "rotbec/manybody.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "rotbec/eigensolver.hpp"
#include "rotbec/errors.hpp"
#include "rotbec/scatter.hpp"

namespace rotbec {

namespace {

constexpr double kPi = std::numbers::pi;
// Below this dimension the ground state is found by dense diagonalization.
constexpr Eigen::Index kDenseLimit = 400;

using Sparse = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<cplx>;

struct Lowest {
  double value;
  Eigen::VectorXcd vector;
  double residual;
};

Lowest lowest_state(const Sparse& h) {
  const Eigen::Index dim = h.rows();
  Lowest out;
  if (dim <= kDenseLimit) {
    Eigen::MatrixXcd dense = Eigen::MatrixXcd(h);
    dense = 0.5 * (dense + dense.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
    out.value = es.eigenvalues()(0);
    out.vector = es.eigenvectors().col(0);
  } else {
    const Eigen::VectorXcd diag = h.diagonal();
    const double dmin = diag.real().minCoeff();
    auto apply = [&](const Block& in, Block& o) { o = h * in; };
    auto precondition = [&](const Block& in, Block& o) {
      o = in;
      for (Eigen::Index i = 0; i < dim; ++i) o.row(i) /= (diag(i).real() - dmin + 1.0);
    };
    // Start on the lowest diagonal entries plus a smooth random admixture.
    const int block = 4;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
    std::partial_sort(order.begin(), order.begin() + block, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return diag(a).real() < diag(b).real(); });
    std::mt19937_64 rng(0xf0c5);
    std::normal_distribution<double> normal;
    Block x0(dim, block);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (int c = 0; c < block; ++c) x0(i, c) = 1e-3 * cplx(normal(rng), normal(rng));
    for (int c = 0; c < block; ++c) x0(order[static_cast<std::size_t>(c)], c) += 1.0;
    EigenOptions eo;
    eo.tol = 1e-9;
    eo.max_iter = 5000;
    const EigenResult r = lobpcg(apply, precondition, std::move(x0), 1, eo);
    out.value = r.values(0);
    out.vector = r.vectors.col(0);
  }
  out.vector.normalize();
  out.residual = (h * out.vector - out.value * out.vector).norm();
  return out;
}

Sparse bosonic_hamiltonian(const FockProblem& p, const std::vector<std::vector<int>>& basis) {
  std::map<std::vector<int>, Eigen::Index> where;
  for (std::size_t s = 0; s < basis.size(); ++s) where.emplace(basis[s], static_cast<Eigen::Index>(s));
  const int m = p.modes;
  std::vector<Triplet> trip;
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const auto& n = basis[s];
    double diag = 0.0;
    for (int j = 0; j < m; ++j) diag += p.energies[j] * n[j];
    trip.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), diag);
    // 1/2 W_ijkl a_i^+ a_j^+ a_l a_k
    for (int k = 0; k < m; ++k) {
      if (n[k] == 0) continue;
      std::vector<int> n1 = n;
      double amp1 = std::sqrt(static_cast<double>(n1[k]--));
      for (int l = 0; l < m; ++l) {
        if (n1[l] == 0) continue;
        std::vector<int> n2 = n1;
        const double amp2 = amp1 * std::sqrt(static_cast<double>(n2[l]--));
        for (int j = 0; j < m; ++j) {
          std::vector<int> n3 = n2;
          const double amp3 = amp2 * std::sqrt(static_cast<double>(++n3[j]));
          for (int i = 0; i < m; ++i) {
            const cplx wv = p.W(i, j, k, l);
            if (wv == 0.0) continue;
            std::vector<int> n4 = n3;
            const double amp4 = amp3 * std::sqrt(static_cast<double>(++n4[i]));
            trip.emplace_back(where.at(n4), static_cast<Eigen::Index>(s), 0.5 * wv * amp4);
          }
        }
      }
    }
  }
  Sparse h(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

// Truncated GP functional in mode coordinates,
//   E(c) = sum e_j |c_j|^2 + 4 pi g sum conj(c_i c_j) c_k c_l Q_ijkl,
// Q_ijkl = integral conj(phi_i phi_j) phi_k phi_l.
struct ModeSpan {
  std::vector<double> e;
  std::vector<cplx> q;  // already multiplied by 4 pi g
  int m;

  double energy(const Eigen::VectorXcd& c) const {
    double lin = 0.0;
    for (int j = 0; j < m; ++j) lin += e[j] * std::norm(c(j));
    cplx quart = 0.0;
    std::size_t x = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const cplx cij = std::conj(c(i) * c(j));
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l) quart += cij * c(k) * c(l) * q[x++];
      }
    return lin + quart.real();
  }
  // d E / d conj(c)
  Eigen::VectorXcd gradient(const Eigen::VectorXcd& c) const {
    Eigen::VectorXcd g(m);
    std::size_t x = 0;
    for (int i = 0; i < m; ++i) g(i) = e[i] * c(i);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l) g(i) += 2.0 * std::conj(c(j)) * c(k) * c(l) * q[x++];
    return g;
  }
};

}  // namespace

double FockProblem::symmetry_defect() const {
  double d = 0.0;
  for (int i = 0; i < modes; ++i)
    for (int j = 0; j < modes; ++j)
      for (int k = 0; k < modes; ++k)
        for (int l = 0; l < modes; ++l) {
          const cplx v = W(i, j, k, l);
          d = std::max({d, std::abs(v - W(j, i, l, k)), std::abs(v - std::conj(W(k, l, i, j)))});
        }
  return d;
}

std::size_t bosonic_dimension(int modes, int particles) {
  // C(N + M - 1, M - 1)
  double c = 1.0;
  for (int i = 1; i < modes; ++i) c = c * (particles + i) / i;
  return static_cast<std::size_t>(std::llround(c));
}

void validate(const FockProblem& p) {
  if (p.modes < 1 || p.modes > 6) throw InvalidState("fock problem: need 1 <= M <= 6");
  if (p.particles < 1 || p.particles > 10) throw InvalidState("fock problem: need 1 <= N <= 10");
  const auto m = static_cast<std::size_t>(p.modes);
  if (p.energies.size() != m || p.w.size() != m * m * m * m)
    throw InvalidState("fock problem: energies or W have the wrong size");
  if (!(p.symmetry_defect() <= 1e-10)) throw InvalidState("fock problem: W lacks pair symmetry");
  if (bosonic_dimension(p.modes, p.particles) > 100000)
    throw DimensionTooLarge("fock problem: more than 1e5 occupation states");
}

std::vector<std::vector<int>> occupation_basis(int modes, int particles) {
  std::vector<std::vector<int>> out;
  std::vector<int> n(static_cast<std::size_t>(modes), 0);
  // Recursive fill, smallest first occupation first.
  auto fill = [&](auto&& self, int mode, int left) -> void {
    if (mode == modes - 1) {
      n[static_cast<std::size_t>(mode)] = left;
      out.push_back(n);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      n[static_cast<std::size_t>(mode)] = k;
      self(self, mode + 1, left - k);
    }
  };
  fill(fill, 0, particles);
  return out;
}

FockResult ground_state_bosonic(const FockProblem& p) {
  validate(p);
  const auto basis = occupation_basis(p.modes, p.particles);
  const Sparse h = bosonic_hamiltonian(p, basis);
  const Lowest g = lowest_state(h);
  if (!(g.residual <= 1e-8)) throw NoConvergence("ground_state_bosonic: residual too large", 0);

  FockResult r;
  r.e0 = g.value;
  r.residual = g.residual;
  r.ground_vector = g.vector;

  std::map<std::vector<int>, Eigen::Index> where;
  for (std::size_t s = 0; s < basis.size(); ++s) where.emplace(basis[s], static_cast<Eigen::Index>(s));
  const int m = p.modes;
  r.gamma1 = Eigen::MatrixXcd::Zero(m, m);
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const cplx cs = g.vector(static_cast<Eigen::Index>(s));
    if (cs == 0.0) continue;
    for (int j = 0; j < m; ++j) {
      if (basis[s][j] == 0) continue;
      for (int k = 0; k < m; ++k) {
        std::vector<int> t = basis[s];
        double amp = std::sqrt(static_cast<double>(t[j]--));
        amp *= std::sqrt(static_cast<double>(++t[k]));
        r.gamma1(j, k) += std::conj(g.vector(where.at(t))) * amp * cs;
      }
    }
  }
  r.gamma1 = 0.5 * (r.gamma1 + r.gamma1.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r.gamma1, Eigen::EigenvaluesOnly);
  r.condensate_fraction = es.eigenvalues().maxCoeff() / p.particles;
  return r;
}

double ground_state_absolute(const FockProblem& p) {
  validate(p);
  const int m = p.modes, n = p.particles;
  double dim_d = std::pow(static_cast<double>(m), n);
  if (dim_d > 1e4) throw DimensionTooLarge("absolute ground state: M^N exceeds 1e4");
  const auto dim = static_cast<Eigen::Index>(std::llround(dim_d));

  std::vector<Eigen::Index> power(static_cast<std::size_t>(n));
  for (int q = n - 1, pw = 1; q >= 0; --q, pw *= m) power[static_cast<std::size_t>(q)] = pw;
  std::vector<Triplet> trip;
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (Eigen::Index s = 0; s < dim; ++s) {
    Eigen::Index rest = s;
    for (int q = 0; q < n; ++q) {
      digits[static_cast<std::size_t>(q)] = static_cast<int>(rest / power[static_cast<std::size_t>(q)]);
      rest %= power[static_cast<std::size_t>(q)];
    }
    double diag = 0.0;
    for (int d : digits) diag += p.energies[static_cast<std::size_t>(d)];
    trip.emplace_back(s, s, diag);
    for (int q1 = 0; q1 < n; ++q1)
      for (int q2 = q1 + 1; q2 < n; ++q2) {
        const int c = digits[static_cast<std::size_t>(q1)], d = digits[static_cast<std::size_t>(q2)];
        const Eigen::Index base = s - c * power[static_cast<std::size_t>(q1)] - d * power[static_cast<std::size_t>(q2)];
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            const cplx wv = p.W(a, b, c, d);
            if (wv == 0.0) continue;
            trip.emplace_back(base + a * power[static_cast<std::size_t>(q1)] + b * power[static_cast<std::size_t>(q2)], s, wv);
          }
      }
  }
  Sparse h(dim, dim);
  h.setFromTriplets(trip.begin(), trip.end());
  const Lowest g = lowest_state(h);
  if (!(g.residual <= 1e-8)) throw NoConvergence("ground_state_absolute: residual too large", 0);
  return g.value;
}

double unit_gaussian_amplitude() {
  static const double amplitude = [] {
    auto f = [](double amp) {
      return scattering_length(RadialPotential::gaussian(amp, 1.0)) - 1.0;
    };
    boost::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(
        f, 1.0, 1e4, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (lo + hi);
  }();
  return amplitude;
}

std::vector<cplx> build_w_tensor(const std::vector<Field>& modes, const PairPotential& v) {
  const int m = static_cast<int>(modes.size());
  if (m == 0) throw InvalidState("build_w_tensor: no modes");
  const Grid& grid = modes[0].grid();
  const std::size_t npts = grid.size();
  const double dv = grid.cell_volume();
  std::vector<cplx> w(static_cast<std::size_t>(m) * m * m * m, 0.0);
  auto idx = [m](int i, int j, int k, int l) {
    return ((static_cast<std::size_t>(i) * m + j) * m + k) * m + l;
  };
  if (v.kind == PairPotential::Kind::none || v.a == 0.0) return w;

  if (v.kind == PairPotential::Kind::contact) {
    const double c = 8.0 * kPi * v.a * dv;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l) {
            cplx s = 0.0;
            for (std::size_t x = 0; x < npts; ++x)
              s += std::conj(modes[i][x] * modes[j][x]) * modes[k][x] * modes[l][x];
            w[idx(i, j, k, l)] = c * s;
          }
  } else {
    // Fourier transform of A a^-2 exp(-|x|^2 / a^2) in the grid dimension.
    const double amp = unit_gaussian_amplitude() / (v.a * v.a) *
                       std::pow(kPi * v.a * v.a, 0.5 * grid.dim());
    const auto k2 = grid.k_squared();
    std::vector<double> kernel(npts);
    for (std::size_t x = 0; x < npts; ++x) kernel[x] = amp * std::exp(-0.25 * k2[x] * v.a * v.a);
    std::vector<cplx> pair(npts);
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < m; ++l) {
        for (std::size_t x = 0; x < npts; ++x) pair[x] = std::conj(modes[j][x]) * modes[l][x];
        grid.forward(pair, pair);
        for (std::size_t x = 0; x < npts; ++x) pair[x] *= kernel[x];
        grid.backward(pair, pair);
        for (int i = 0; i < m; ++i)
          for (int k = 0; k < m; ++k) {
            cplx s = 0.0;
            for (std::size_t x = 0; x < npts; ++x) s += std::conj(modes[i][x]) * modes[k][x] * pair[x];
            w[idx(i, j, k, l)] = s * dv;
          }
      }
  }

  std::vector<cplx> sym(w.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
          sym[idx(i, j, k, l)] = 0.25 * (w[idx(i, j, k, l)] + w[idx(j, i, l, k)] +
                                         std::conj(w[idx(k, l, i, j)]) + std::conj(w[idx(l, k, j, i)]));
  return sym;
}

FockProblem make_problem(const std::vector<Eigenpair>& modes, int particles,
                         const PairPotential& v) {
  FockProblem p;
  p.modes = static_cast<int>(modes.size());
  p.particles = particles;
  std::vector<Field> fields;
  for (const auto& e : modes) {
    p.energies.push_back(e.energy);
    fields.push_back(e.field);
  }
  p.w = build_w_tensor(fields, v);
  return p;
}

double truncated_gp_energy(const std::vector<Eigenpair>& modes, double g) {
  if (modes.empty()) throw InvalidState("truncated_gp_energy: no modes");
  const int m = static_cast<int>(modes.size());
  ModeSpan span{{}, {}, m};
  std::vector<Field> fields;
  for (const auto& p : modes) {
    span.e.push_back(p.energy);
    fields.push_back(p.field);
  }
  // The contact tensor at a = 1 is 8 pi Q.
  span.q = build_w_tensor(fields, PairPotential::contact(1.0));
  for (cplx& v : span.q) v *= g / 2.0;
  std::mt19937_64 rng(0x7c0de);
  std::normal_distribution<double> normal;

  double best = std::numeric_limits<double>::infinity();
  const int starts = g == 0.0 ? 1 : 24;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(m);
    if (s == 0) {
      c(0) = 1.0;
    } else {
      for (int j = 0; j < m; ++j) c(j) = cplx(normal(rng), normal(rng));
      c.normalize();
    }
    double e = span.energy(c);
    double step = 0.1 / (std::abs(modes.back().energy) + 8.0 * kPi * g + 1.0);
    for (int it = 0; it < 100000; ++it) {
      const Eigen::VectorXcd grad = span.gradient(c);
      const cplx mu = c.dot(grad);
      const Eigen::VectorXcd r = grad - mu.real() * c;
      if (r.norm() <= 1e-8) break;
      bool moved = false;
      for (int b = 0; b < 60; ++b, step *= 0.5) {
        Eigen::VectorXcd trial = (c - step * r).normalized();
        const double et = span.energy(trial);
        if (et < e) {
          c = std::move(trial);
          e = et;
          moved = true;
          step *= 2.0;
          break;
        }
      }
      if (!moved) break;
    }
    best = std::min(best, e);
  }
  return best;
}

std::vector<ScanRow> gp_limit_scan(const ModelSpec& spec, int modes, double g,
                                   const std::vector<int>& n_list, bool with_absolute,
                                   const PairPotential::Kind kind) {
  const auto pairs = lowest_eigenpairs(spec, modes);
  const double egp = truncated_gp_energy(pairs, g);
  std::vector<ScanRow> rows;
  for (int n : n_list) {
    if (n < 2 || n > 10) throw InvalidState("gp_limit_scan: N must lie in [2, 10]");
    ScanRow row;
    row.n = n;
    row.a = g / n;
    const FockProblem p = make_problem(pairs, n, {kind, row.a});
    const FockResult r = ground_state_bosonic(p);
    row.e0_over_n = r.e0 / n;
    row.e_gp_truncated = egp;
    row.condensate_fraction = r.condensate_fraction;
    if (with_absolute && std::pow(static_cast<double>(modes), n) <= 1e4)
      row.e_abs = ground_state_absolute(p);
    rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXcd coherent_vector(int dimension, cplx z) {
  Eigen::VectorXcd v(dimension);
  v(0) = std::exp(-0.5 * std::norm(z));
  for (int n = 1; n < dimension; ++n) v(n) = v(n - 1) * z / std::sqrt(static_cast<double>(n));
  return v;
}

CoherentReport coherent_state_checks(int dimension, cplx z, double radius, int n_max,
                                     int radial, int angular) {
  if (dimension < 1 || n_max < 0 || n_max >= dimension || radial < 1 || angular < 1)
    throw InvalidState("coherent_state_checks: bad truncation or quadrature sizes");
  CoherentReport rep;
  const Eigen::VectorXcd v = coherent_vector(dimension, z);
  rep.norm = v.norm();
  for (int n = 0; n + 1 < dimension; ++n) rep.mean_a += std::conj(v(n)) * v(n + 1) * std::sqrt(n + 1.0);
  for (int n = 0; n < dimension; ++n) rep.mean_number += n * std::norm(v(n));

  const int span = n_max + 1;
  Eigen::MatrixXcd ident = Eigen::MatrixXcd::Zero(span, span);
  Eigen::MatrixXcd upper = ident, weighted = ident;
  const double dr = radius / radial, dth = 2.0 * kPi / angular;
  for (int a = 0; a < radial; ++a) {
    const double r = (a + 0.5) * dr;
    for (int b = 0; b < angular; ++b) {
      const cplx zz = std::polar(r, b * dth);
      const Eigen::VectorXcd c = coherent_vector(span, zz);
      const double wgt = r * dr * dth / kPi;
      const Eigen::MatrixXcd proj = c * c.adjoint();
      ident += wgt * proj;
      upper += wgt * (r * r - 1.0) * proj;
      weighted += wgt * r * r * proj;
    }
  }
  auto op_norm = [](const Eigen::MatrixXcd& x) {
    const Eigen::MatrixXcd h = 0.5 * (x + x.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  Eigen::VectorXd number(span);
  for (int n = 0; n < span; ++n) number(n) = n;
  rep.completeness_error = op_norm(ident - Eigen::MatrixXcd::Identity(span, span));
  rep.upper_symbol_error = op_norm(upper - Eigen::MatrixXcd(number.cast<cplx>().asDiagonal()));
  rep.weighted_error =
      op_norm(weighted - Eigen::MatrixXcd((number.array() + 1.0).matrix().cast<cplx>().asDiagonal()));
  return rep;
}

}  // namespace rotbec
