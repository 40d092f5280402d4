#include "rotbec/dm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "rotbec/eigensolver.hpp"
#include "rotbec/errors.hpp"
#include "rotbec/sphere_flow.hpp"

namespace rotbec {

namespace {

constexpr double kPi = std::numbers::pi;
// Occupations below this are treated as empty orbitals.
constexpr double kEmpty = 1e-12;

Block to_block(const std::vector<Field>& fields, const Grid& grid) {
  const double s = std::sqrt(grid.cell_volume());
  Block b(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t c = 0; c < fields.size(); ++c)
    for (std::size_t i = 0; i < grid.size(); ++i)
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = s * fields[c][i];
  return b;
}

std::vector<Field> from_block(const Block& b, const Grid& grid) {
  const double s = 1.0 / std::sqrt(grid.cell_volume());
  std::vector<Field> out;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    std::vector<cplx> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = s * b(static_cast<Eigen::Index>(i), c);
    out.emplace_back(grid, std::move(v));
  }
  return out;
}

struct WeightProblem {
  std::vector<double> h;  // <phi_i|H0|phi_i>
  std::vector<double> q;  // 4 pi g integral |phi_i|^2 |phi_j|^2
  double value(const std::vector<double>& w) const {
    const std::size_t n = w.size();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e += h[i] * w[i];
      for (std::size_t j = 0; j < n; ++j) e += w[i] * q[i * n + j] * w[j];
    }
    return e;
  }
};

WeightProblem weight_problem(const ModelSpec& spec, const std::vector<Field>& orbitals) {
  const std::size_t n = orbitals.size();
  const Grid& grid = spec.grid();
  Hamiltonian ham(spec);
  WeightProblem p;
  p.h.resize(n);
  p.q.assign(n * n, 0.0);
  std::vector<std::vector<double>> dens;
  for (std::size_t i = 0; i < n; ++i) {
    p.h[i] = inner(orbitals[i], ham.apply(orbitals[i])).real();
    dens.push_back(orbitals[i].density());
  }
  const double c = 4.0 * kPi * spec.g() * grid.cell_volume();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) s += dens[i][k] * dens[j][k];
      p.q[i * n + j] = p.q[j * n + i] = c * s;
    }
  return p;
}

// Unoccupied orbitals: lowest states of H0 + 8 pi g rho orthogonal to the
// occupied ones.
std::vector<Field> fill_unoccupied(const ModelSpec& spec, const std::vector<Field>& occupied,
                                   const std::vector<double>& rho, std::vector<Field> previous,
                                   std::size_t wanted, double sigma) {
  if (wanted == 0) return {};
  const Grid& grid = spec.grid();
  const Block occ = orthonormalize(to_block(occupied, grid));

  const std::size_t extra = 2;
  std::mt19937_64 rng(0xd3a7 + wanted);
  std::normal_distribution<double> normal;
  while (previous.size() < wanted + extra) {
    Field f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Point p = grid.point(i);
      const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
      f[i] = std::exp(-0.5 * r2) * cplx(normal(rng), normal(rng));
    }
    previous.push_back(std::move(f));
  }
  Block start = orthonormalize(to_block(previous, grid), &occ);

  Hamiltonian ham(spec);
  const double coupling = 8.0 * kPi * spec.g();
  auto apply = [&](const Block& in, Block& out) {
    out.resize(in.rows(), in.cols());
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      ham.apply(std::span<const cplx>(in.col(c).data(), grid.size()),
                std::span<cplx>(out.col(c).data(), grid.size()));
      for (std::size_t i = 0; i < grid.size(); ++i)
        out(static_cast<Eigen::Index>(i), c) += coupling * rho[i] * in(static_cast<Eigen::Index>(i), c);
    }
  };
  auto precondition = [&](const Block& in, Block& out) {
    out = in;
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      apply_kinetic_preconditioner(grid, sigma, std::span<cplx>(out.col(c).data(), grid.size()));
  };
  EigenOptions eo;
  eo.tol = 1e-6;
  eo.max_iter = 3000;
  const EigenResult res =
      lobpcg(apply, precondition, std::move(start), static_cast<int>(wanted), eo, &occ);
  return from_block(res.vectors.leftCols(static_cast<Eigen::Index>(wanted)), grid);
}

// Diagonalizes the Gram matrix of the flow columns: gamma = sum |psi><psi|
// rewritten as sum w_i |phi_i><phi_i| with orthonormal phi_i.
void canonicalize(const std::vector<Field>& columns, std::vector<Field>& orbitals,
                  std::vector<double>& weights) {
  const auto k = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXcd gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      gram(i, j) = inner(columns[static_cast<std::size_t>(i)], columns[static_cast<std::size_t>(j)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  orbitals.clear();
  weights.clear();
  for (Eigen::Index a = k - 1; a >= 0; --a) {
    const double w = eig.eigenvalues()(a);
    if (!(w > kEmpty)) continue;
    Field f(columns[0].grid());
    for (Eigen::Index j = 0; j < k; ++j) f.axpy(eig.eigenvectors()(j, a), columns[static_cast<std::size_t>(j)]);
    // Re-orthonormalize against the larger occupations (rounding in 1/sqrt(w)).
    for (const auto& o : orbitals) f.axpy(-inner(o, f), o);
    f *= 1.0 / f.norm();
    orbitals.push_back(std::move(f));
    weights.push_back(w);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
}

}  // namespace

std::vector<double> DMState::density() const {
  if (orbitals.empty()) return {};
  std::vector<double> rho(orbitals[0].size(), 0.0);
  for (std::size_t c = 0; c < orbitals.size(); ++c) {
    const auto v = orbitals[c].values();
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += weights[c] * std::norm(v[i]);
  }
  return rho;
}

void validate(const DMState& state) {
  const std::size_t n = state.orbitals.size();
  if (n == 0 || state.weights.size() != n)
    throw InvalidState("density matrix: orbital and weight counts differ or are zero");
  double total = 0.0;
  for (double w : state.weights) {
    if (!(w >= -1e-12)) throw InvalidState("density matrix: negative weight");
    total += w;
  }
  if (!(std::abs(total - 1.0) <= 1e-12))
    throw InvalidState("density matrix: weights sum to " + std::to_string(total));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      if (!(state.orbitals[i].grid() == state.orbitals[j].grid()))
        throw InvalidState("density matrix: orbitals live on different grids");
      const cplx ip = inner(state.orbitals[i], state.orbitals[j]);
      const double expect = i == j ? 1.0 : 0.0;
      if (!(std::abs(ip - expect) <= 1e-10))
        throw InvalidState("density matrix: orbitals are not orthonormal");
    }
}

double dm_energy(const ModelSpec& spec, const DMState& state) {
  validate(state);
  if (!(state.orbitals[0].grid() == spec.grid()))
    throw InvalidState("density matrix: grid differs from the model grid");
  Hamiltonian ham(spec);
  double e = 0.0;
  for (std::size_t i = 0; i < state.rank(); ++i)
    e += state.weights[i] * inner(state.orbitals[i], ham.apply(state.orbitals[i])).real();
  const auto rho = state.density();
  double q = 0.0;
  for (double r : rho) q += r * r;
  return e + 4.0 * kPi * spec.g() * q * spec.grid().cell_volume();
}

std::vector<double> project_to_simplex(std::vector<double> v) {
  const std::size_t n = v.size();
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

std::vector<double> minimize_on_simplex(const std::vector<double>& h,
                                        const std::vector<double>& q,
                                        std::vector<double> start, double tol) {
  const std::size_t n = h.size();
  const WeightProblem p{h, q};
  Eigen::MatrixXd qm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) qm(i, j) = q[i * n + j];
  const double lip = 2.0 * (n ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(qm, Eigen::EigenvaluesOnly)
                                    .eigenvalues()
                                    .maxCoeff()
                              : 0.0);

  std::vector<double> best = project_to_simplex(std::move(start));
  double best_val = p.value(best);
  auto consider = [&](const std::vector<double>& w) {
    const double v = p.value(w);
    if (v < best_val) {
      best_val = v;
      best = w;
    }
  };

  if (!(lip > 0.0)) {
    // Linear objective: the minimum sits on a vertex.
    const auto k = static_cast<std::size_t>(std::min_element(h.begin(), h.end()) - h.begin());
    std::vector<double> vertex(n, 0.0);
    vertex[k] = 1.0;
    consider(vertex);
    return best;
  }

  // FISTA with restart on objective increase.
  std::vector<double> x = best, y = best, grad(n);
  double t = 1.0, fx = best_val;
  for (int it = 0; it < 1000000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = h[i];
      for (std::size_t j = 0; j < n; ++j) g += 2.0 * q[i * n + j] * y[j];
      grad[i] = y[i] - g / lip;
    }
    std::vector<double> xn = project_to_simplex(grad);
    const double fn = p.value(xn);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(xn[i] - x[i]));
    if (fn > fx) {
      t = 1.0;
      y = x;
      if (change <= tol) break;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) y[i] = xn[i] + (t - 1.0) / tn * (xn[i] - x[i]);
    x = std::move(xn);
    fx = fn;
    t = tn;
    consider(x);
    if (change <= tol) break;
  }

  // Polish on the detected support by solving the KKT system exactly.
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i)
    if (best[i] > 0.0) support.push_back(i);
  const auto s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
  Eigen::VectorXd rhs(s + 1);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = 2.0 * qm(support[a], support[b]);
    kkt(a, s) = -1.0;
    kkt(s, a) = 1.0;
    rhs(a) = -h[support[a]];
  }
  rhs(s) = 1.0;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  std::vector<double> polished(n, 0.0);
  bool feasible = sol.allFinite();
  for (Eigen::Index a = 0; a < s && feasible; ++a) {
    if (sol(a) < 0.0) feasible = false;
    polished[support[a]] = sol(a);
  }
  if (feasible) {
    const double total = std::accumulate(polished.begin(), polished.end(), 0.0);
    if (std::abs(total - 1.0) < 1e-9) {
      for (double& w : polished) w /= total;
      if (p.value(polished) <= best_val + 1e-14 * std::max(1.0, std::abs(best_val))) best = polished;
    }
  }
  return best;
}

DMResult minimize_dm(const ModelSpec& spec, int n, const DMOptions& opts,
                     const std::optional<DMState>& initial) {
  if (n < 1 || n > 8) throw InvalidState("minimize_dm: rank must be between 1 and 8");
  require_stable(spec);
  const Grid& grid = spec.grid();

  std::vector<Field> occupied;
  std::vector<double> weights;
  if (initial) {
    validate(*initial);
    if (initial->rank() > static_cast<std::size_t>(n))
      throw InvalidState("minimize_dm: initial state exceeds the rank cap");
    for (std::size_t i = 0; i < initial->rank(); ++i)
      if (initial->weights[i] > kEmpty) {
        occupied.push_back(initial->orbitals[i]);
        weights.push_back(initial->weights[i]);
      }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
  } else {
    GPResult gp = minimize_gp(spec, opts.gp);
    occupied.push_back(std::move(gp.phi));
    weights.push_back(1.0);
  }

  FlowOptions fo;
  fo.tol = opts.tol;
  fo.max_iter = opts.max_iter;

  auto density_of = [&](const std::vector<Field>& orb, const std::vector<double>& w) {
    std::vector<double> rho(grid.size(), 0.0);
    for (std::size_t c = 0; c < orb.size(); ++c)
      for (std::size_t i = 0; i < grid.size(); ++i) rho[i] += w[c] * std::norm(orb[c][i]);
    return rho;
  };

  std::vector<Field> empty;
  DMResult out;
  bool flow_ok = false;
  double mu = 0.0;
  {
    const auto rho = density_of(occupied, weights);
    DMState s{occupied, weights};
    mu = dm_energy(spec, s);
    double q = 0.0;
    for (double r : rho) q += r * r;
    mu += 4.0 * kPi * spec.g() * q * grid.cell_volume();
  }

  for (int alt = 0;; ++alt) {
    const std::size_t wanted = static_cast<std::size_t>(n) - occupied.size();
    const auto rho = density_of(occupied, weights);
    empty = fill_unoccupied(spec, occupied, rho, std::move(empty), wanted, std::max(1.0, mu));

    // Exact weight update over all n orbitals.
    std::vector<Field> orbitals = occupied;
    orbitals.insert(orbitals.end(), empty.begin(), empty.end());
    std::vector<double> w = weights;
    w.resize(orbitals.size(), 0.0);
    const WeightProblem wp = weight_problem(spec, orbitals);
    const double before = wp.value(w);
    std::vector<double> wn = minimize_on_simplex(wp.h, wp.q, w);
    const double after = wp.value(wn);
    if (after > before + 1e-12 * std::max(1.0, std::abs(before)))
      throw InvalidState("minimize_dm: weight update raised the energy");
    double change = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) change = std::max(change, std::abs(wn[i] - w[i]));

    if ((flow_ok && change <= 1e-10) || alt >= opts.max_alternations) {
      out.state.orbitals = std::move(orbitals);
      out.state.weights = std::move(wn);
      out.orbital_h0 = wp.h;
      out.alternations = alt;
      if (!(flow_ok && change <= 1e-10))
        throw NoConvergence("minimize_dm", out.iterations);
      break;
    }

    // Orbital flow on gamma = Psi Psi^H over the occupied part.
    std::vector<Field> columns;
    std::vector<Field> carried;
    for (std::size_t i = 0; i < orbitals.size(); ++i) {
      if (wn[i] > kEmpty)
        columns.push_back(std::sqrt(wn[i]) * orbitals[i]);
      else
        carried.push_back(orbitals[i]);
    }
    fo.max_iter = std::min<std::size_t>(opts.flow_chunk, opts.max_iter - std::min(opts.max_iter, out.iterations));
    FlowResult flow = sphere_flow(spec, std::move(columns), fo);
    out.iterations += flow.iterations;
    out.residual = flow.residual;
    flow_ok = flow.converged;
    mu = flow.mu;
    canonicalize(flow.columns, occupied, weights);
    empty = std::move(carried);
  }

  out.state.weights = project_to_simplex(out.state.weights);
  out.energy = dm_energy(spec, out.state);
  out.mu = mu;
  return out;
}

}  // namespace rotbec
