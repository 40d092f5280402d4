#include "rotbec/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rotbec/errors.hpp"

namespace rotbec {

namespace {

std::array<double, 3> omega_cross(const std::array<double, 3>& w, const Point& x) {
  return {w[1] * x[2] - w[2] * x[1], w[2] * x[0] - w[0] * x[2], w[0] * x[1] - w[1] * x[0]};
}

double confinement_profile(double v, const std::array<double, 3>& w, const Point& x) {
  const auto c = omega_cross(w, x);
  return v - 0.25 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
}

std::vector<double> as_vector(const Point& p, int dim) {
  return std::vector<double>(p.begin(), p.begin() + dim);
}

}  // namespace

Trap Trap::harmonic(std::vector<double> nu) {
  Trap t;
  t.kind = TrapKind::harmonic;
  t.nu = std::move(nu);
  return t;
}

Trap Trap::quartic(std::vector<double> nu, double lambda) {
  Trap t;
  t.kind = TrapKind::quartic;
  t.nu = std::move(nu);
  t.lambda = lambda;
  return t;
}

Trap Trap::sampled(std::vector<double> values) {
  Trap t;
  t.kind = TrapKind::sampled;
  t.samples = std::move(values);
  return t;
}

double Trap::operator()(const Point& x) const {
  double v = 0.0, r2 = 0.0;
  for (std::size_t a = 0; a < nu.size(); ++a) {
    v += nu[a] * nu[a] * x[a] * x[a];
    r2 += x[a] * x[a];
  }
  if (kind == TrapKind::quartic) v += lambda * r2 * r2;
  return v;
}

double RotationSpec::magnitude() const {
  return std::sqrt(omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]);
}

ModelSpec::ModelSpec(Grid grid, Trap trap, RotationSpec rotation, double g)
    : grid_(std::move(grid)), trap_(std::move(trap)), rotation_(rotation), g_(g) {
  if (!(g_ >= 0.0) || !std::isfinite(g_)) throw ConfigError("coupling g must be >= 0");
  const int dim = grid_.dim();
  if (dim == 2 && (rotation_.omega[0] != 0.0 || rotation_.omega[1] != 0.0))
    throw ConfigError("in 2D only the out-of-plane rotation component may be nonzero");
  auto values = std::make_shared<std::vector<double>>(grid_.size());
  if (trap_.kind == TrapKind::sampled) {
    if (trap_.samples.size() != grid_.size())
      throw ConfigError("sampled trap does not match the grid");
    *values = trap_.samples;
  } else {
    if (trap_.nu.size() == 1) trap_.nu.assign(dim, trap_.nu[0]);
    if (static_cast<int>(trap_.nu.size()) != dim)
      throw ConfigError("trap needs one frequency per axis");
    if (trap_.kind == TrapKind::quartic && !(trap_.lambda > 0.0))
      throw ConfigError("quartic trap needs lambda > 0");
    for (std::size_t i = 0; i < grid_.size(); ++i) (*values)[i] = trap_(grid_.point(i));
  }
  for (double v : *values)
    if (!std::isfinite(v)) throw ConfigError("trap potential is not finite on the grid");
  potential_ = std::move(values);
}

bool ModelSpec::axisymmetric() const {
  if (trap_.kind == TrapKind::sampled) return false;
  const auto& nu = trap_.nu;
  if (grid_.dim() == 2) return nu[0] == nu[1];
  const auto& w = rotation_.omega;
  int axis = 2;
  const int nonzero = (w[0] != 0.0) + (w[1] != 0.0) + (w[2] != 0.0);
  if (nonzero > 1) return nu[0] == nu[1] && nu[1] == nu[2];
  if (w[0] != 0.0) axis = 0;
  if (w[1] != 0.0) axis = 1;
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  return nu[a] == nu[b];
}

ModelSpec ModelSpec::with_coupling(double g) const {
  ModelSpec copy = *this;
  if (!(g >= 0.0)) throw ConfigError("coupling g must be >= 0");
  copy.g_ = g;
  return copy;
}

ModelSpec ModelSpec::with_rotation(RotationSpec rotation) const {
  return ModelSpec(grid_, trap_, rotation, g_);
}

// ---------------------------------------------------------------------------

Stability check_stability(const Trap& trap, const RotationSpec& rotation, const Grid& grid,
                          double margin, int shell) {
  const int dim = grid.dim();
  Stability out;
  if (trap.kind == TrapKind::quartic) return out;

  if (trap.kind == TrapKind::harmonic) {
    std::vector<double> nu = trap.nu;
    if (nu.size() == 1) nu.assign(dim, nu[0]);
    const auto& w = rotation.omega;
    const double w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    // V - |Omega^x|^2/4 = x^T (diag(nu^2) - (|w|^2 I - w w^T)/4) x; in 2D the
    // in-plane components of w vanish.
    Eigen::MatrixXd form = Eigen::MatrixXd::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) {
      form(a, a) = nu[a] * nu[a] - 0.25 * w2;
      for (int b = 0; b < dim; ++b) form(a, b) += 0.25 * w[a] * w[b];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(form);
    if (es.eigenvalues()(0) > 0.0) return out;
    // Walk along the softest direction to the box boundary.
    const Eigen::VectorXd dir = es.eigenvectors().col(0);
    double t = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a)
      if (std::abs(dir(a)) > 1e-12) t = std::min(t, grid.half_width(a) / std::abs(dir(a)));
    out.stable = false;
    out.witness.resize(dim);
    for (int a = 0; a < dim; ++a) {
      const double h = grid.spacing(a);
      const double x = std::clamp(std::round(t * dir(a) / h) * h, -grid.half_width(a),
                                  grid.half_width(a) - h);
      out.witness[a] = x;
    }
    return out;
  }

  // Sampled trap: boundary-shell heuristic.
  std::size_t center = 0;
  for (int a = 0; a < dim; ++a) center += (grid.points(a) / 2) * grid.stride(a);
  const double f_center =
      confinement_profile(trap.samples[center], rotation.omega, grid.point(center));
  double f_min = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto ijk = grid.unravel(i);
    bool in_shell = false;
    for (int a = 0; a < dim; ++a)
      if (ijk[a] < shell || ijk[a] >= grid.points(a) - shell) in_shell = true;
    if (!in_shell) continue;
    const double f = confinement_profile(trap.samples[i], rotation.omega, grid.point(i));
    if (f < f_min) {
      f_min = f;
      arg = i;
    }
  }
  if (f_min > f_center + margin) return out;
  out.stable = false;
  out.witness = as_vector(grid.point(arg), dim);
  return out;
}

Stability check_stability(const ModelSpec& spec) {
  return check_stability(spec.trap(), spec.rotation(), spec.grid());
}

void require_stable(const ModelSpec& spec) {
  auto s = check_stability(spec);
  if (!s.stable) {
    std::string where;
    for (double x : s.witness) where += (where.empty() ? "" : ",") + std::to_string(x);
    throw Unstable("trap does not confine at this rotation (witness x=(" + where + "))",
                   s.witness);
  }
}

// ---------------------------------------------------------------------------

Hamiltonian::Hamiltonian(const ModelSpec& spec)
    : spec_(spec), spectrum_(spec.grid().size()), scratch_(spec.grid().size()) {
  const Grid& g = spec_.grid();
  const auto& w = spec_.rotation().omega;
  if (spec_.rotation().is_zero()) return;
  // (Omega ^ x)_a is independent of x_a; tabulate components that are nonzero.
  for (int a = 0; a < g.dim(); ++a) {
    std::vector<double> d(g.size());
    bool any = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] = omega_cross(w, g.odd_point(i))[a];
      any = any || d[i] != 0.0;
    }
    if (any) drift_[a] = std::move(d);
  }
}

void Hamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) {
  const Grid& g = spec_.grid();
  const std::size_t n = g.size();
  g.forward(in, spectrum_);
  const auto k2 = g.k_squared();
  for (std::size_t i = 0; i < n; ++i) scratch_[i] = k2[i] * spectrum_[i];
  g.backward(scratch_, out);
  const auto v = spec_.potential();
  for (std::size_t i = 0; i < n; ++i) out[i] += v[i] * in[i];

  for (int a = 0; a < g.dim(); ++a) {
    if (drift_[a].empty()) continue;
    const auto k = g.wavenumbers(a);
    const int na = g.points(a);
    const std::size_t stride = g.stride(a);
    for (std::size_t i = 0; i < n; ++i) {
      const int ia = static_cast<int>((i / stride) % na);
      scratch_[i] = (ia == na / 2) ? cplx(0.0) : cplx(0.0, k[ia]) * spectrum_[i];
    }
    g.backward(scratch_, scratch_);
    // -Omega.L phi = i (Omega ^ x) . grad phi
    const auto& d = drift_[a];
    for (std::size_t i = 0; i < n; ++i) out[i] += cplx(0.0, d[i]) * scratch_[i];
  }
}

Field Hamiltonian::apply(const Field& phi) {
  Field out(phi.grid());
  apply(phi.values(), out.values());
  return out;
}

Field apply_h0(const ModelSpec& spec, const Field& phi) {
  Hamiltonian h(spec);
  return h.apply(phi);
}

cplx angular_momentum_expectation(const ModelSpec& spec, const Field& phi) {
  const Grid& g = spec.grid();
  const auto& w = spec.rotation().omega;
  Field lphi(g);
  for (int a = 0; a < g.dim(); ++a) {
    const Field d = gradient_spectral(phi, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double c = omega_cross(w, g.odd_point(i))[a];
      lphi[i] += cplx(0.0, -c) * d[i];
    }
  }
  return inner(phi, lphi);
}

void apply_kinetic_preconditioner(const Grid& grid, double sigma, std::span<cplx> values) {
  grid.forward(values, values);
  const auto k2 = grid.k_squared();
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] /= (sigma + k2[i]);
  grid.backward(values, values);
}

std::vector<Eigenpair> lowest_eigenpairs(const ModelSpec& spec, int m,
                                         const EigenOptions& opts) {
  if (m < 1 || m > 16) throw InvalidState("lowest_eigenpairs: need 1 <= m <= 16");
  require_stable(spec);
  const Grid& g = spec.grid();
  const auto rows = static_cast<Eigen::Index>(g.size());
  const int block = m + std::max(2, m / 2);

  // Smooth trial block: low-order polynomials times the trap envelope plus
  // a little seeded noise to avoid symmetry-locked starts.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Block x0(rows, block);
  std::vector<double> nu(g.dim(), 1.0);
  if (spec.trap().kind != TrapKind::sampled)
    for (int a = 0; a < g.dim(); ++a) nu[a] = std::max(0.25, spec.trap().nu[a]);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Point p = g.point(static_cast<std::size_t>(i));
    double env = 0.0;
    for (int a = 0; a < g.dim(); ++a) env += 0.5 * nu[a] * p[a] * p[a];
    const double e = std::exp(-env);
    for (int c = 0; c < block; ++c) {
      const double poly = std::pow(p[0], c % 4) * std::pow(p[1], (c / 4) % 4);
      x0(i, c) = e * cplx(poly + 0.05 * normal(rng), 0.05 * normal(rng));
    }
  }

  Hamiltonian h(spec);
  double sigma = 1.0;
  for (int a = 0; a < g.dim(); ++a) sigma += nu[a];
  auto apply = [&](const Block& in, Block& out) {
    out.resize(in.rows(), in.cols());
    for (Eigen::Index c = 0; c < in.cols(); ++c)
      h.apply(std::span<const cplx>(in.col(c).data(), g.size()),
              std::span<cplx>(out.col(c).data(), g.size()));
  };
  auto precondition = [&](const Block& in, Block& out) {
    out = in;
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      apply_kinetic_preconditioner(g, sigma, std::span<cplx>(out.col(c).data(), g.size()));
  };

  EigenResult res = lobpcg(apply, precondition, std::move(x0), m, opts);
  std::vector<Eigenpair> pairs;
  const double scale = 1.0 / std::sqrt(g.cell_volume());
  for (int j = 0; j < m; ++j) {
    std::vector<cplx> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = res.vectors(static_cast<Eigen::Index>(i), j) * scale;
    pairs.push_back({res.values(j), Field(g, std::move(v))});
  }
  return pairs;
}

}  // namespace rotbec
