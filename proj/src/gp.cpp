#include "rotbec/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rotbec/errors.hpp"
#include "rotbec/sphere_flow.hpp"

namespace rotbec {

namespace {

constexpr double kPi = std::numbers::pi;

void require_normalized(const Field& phi) {
  const double n = phi.norm();
  if (!(std::abs(n - 1.0) <= 1e-8))
    throw NotNormalized("field norm is " + std::to_string(n) + ", expected 1");
}

double quartic_integral(const Field& phi) {
  double s = 0.0;
  for (const auto& v : phi.values()) {
    const double r = std::norm(v);
    s += r * r;
  }
  return s * phi.grid().cell_volume();
}

GPResult package(const ModelSpec& spec, Field phi, const FlowResult& flow, std::string origin) {
  // The flow keeps ||phi|| = 1 only up to rounding between refreshes.
  phi *= 1.0 / phi.norm();
  GPResult r{std::move(phi)};
  r.breakdown = gp_energy(spec, r.phi);
  r.energy = r.breakdown.total;
  r.mu = r.energy + r.breakdown.interaction;
  r.residual = flow.residual;
  r.iterations = flow.iterations;
  r.restarts_used = 1;
  r.converged = flow.converged;
  r.origin = std::move(origin);
  return r;
}

}  // namespace

double gp_functional(const ModelSpec& spec, const Field& phi) {
  Hamiltonian h(spec);
  return inner(phi, h.apply(phi)).real() + 4.0 * kPi * spec.g() * quartic_integral(phi);
}

GPBreakdown gp_energy(const ModelSpec& spec, const Field& phi) {
  require_normalized(phi);
  const Grid& g = spec.grid();
  GPBreakdown b;

  std::vector<cplx> coeffs(g.size());
  g.forward(phi.values(), coeffs);
  const auto k2 = g.k_squared();
  double kin = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) kin += k2[i] * std::norm(coeffs[i]);
  b.kinetic = kin * g.cell_volume() / static_cast<double>(g.size());

  const auto v = spec.potential();
  double pot = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) pot += v[i] * std::norm(phi[i]);
  b.potential = pot * g.cell_volume();

  b.rotational =
      spec.rotation().is_zero() ? 0.0 : -angular_momentum_expectation(spec, phi).real();
  b.interaction = 4.0 * kPi * spec.g() * quartic_integral(phi);
  b.total = b.kinetic + b.potential + b.rotational + b.interaction;
  return b;
}

Field gp_gradient(const ModelSpec& spec, const Field& phi) {
  Field out = apply_h0(spec, phi);
  const double c = 8.0 * kPi * spec.g();
  if (c != 0.0)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * std::norm(phi[i]) * phi[i];
  return out;
}

double chemical_potential(const ModelSpec& spec, const Field& phi) {
  const GPBreakdown b = gp_energy(spec, phi);
  return b.total + b.interaction;
}

Field noise_seed(const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Field f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point p = grid.point(i);
    const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    const double re = normal(rng);
    const double im = normal(rng);
    f[i] = std::exp(-0.5 * r2) * cplx(re, im);
  }
  f *= 1.0 / f.norm();
  return f;
}

Field vortex_seed(const Grid& grid, int winding) {
  Field f = Field::from_function(grid, [winding](const Point& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    const cplx w = winding >= 0 ? cplx(p[0], p[1]) : cplx(p[0], -p[1]);
    return std::pow(w, std::abs(winding)) * std::exp(-0.5 * r2);
  });
  f *= 1.0 / f.norm();
  return f;
}

Field project_rotation_sector(const Field& phi, int winding) {
  // R phi = (-i)^q phi on the sector, so average i^{qk} R^k phi over k.
  const int q = ((winding % 4) + 4) % 4;
  const cplx phase = std::pow(cplx(0.0, 1.0), q);
  Field acc = phi;
  Field rotated = phi;
  cplx w = 1.0;
  for (int k = 1; k < 4; ++k) {
    rotated = rotate_quarter_turn(rotated);
    w *= phase;
    acc.axpy(w, rotated);
  }
  acc *= 0.25;
  return acc;
}

GPResult minimize_gp_from(const ModelSpec& spec, const Field& initial, const GPOptions& opts,
                          std::string origin) {
  require_stable(spec);
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.max_iter = opts.max_iter;
  FlowResult flow = sphere_flow(spec, {initial}, fo);
  Field phi = std::move(flow.columns[0]);
  return package(spec, std::move(phi), flow, std::move(origin));
}

std::vector<GPResult> minimize_gp_runs(const ModelSpec& spec, const GPOptions& opts) {
  require_stable(spec);
  std::vector<GPResult> runs;
  for (int r = 0; r < opts.restarts; ++r) {
    const std::uint64_t s = opts.seed + static_cast<std::uint64_t>(r);
    runs.push_back(minimize_gp_from(spec, noise_seed(spec.grid(), s), opts,
                                    "noise:" + std::to_string(s)));
  }
  if (opts.vortex_seeds)
    for (int q = 0; q <= opts.max_seed_winding; ++q)
      runs.push_back(minimize_gp_from(spec, vortex_seed(spec.grid(), q), opts,
                                      "vortex:" + std::to_string(q)));
  return runs;
}

GPResult best_run(const std::vector<GPResult>& runs) {
  const GPResult* best = nullptr;
  std::size_t iterations = 0;
  for (const auto& r : runs) {
    iterations = std::max(iterations, r.iterations);
    if (r.converged && (!best || r.energy < best->energy)) best = &r;
  }
  if (!best) throw NoConvergence("minimize_gp: no restart converged", iterations);
  GPResult out = *best;
  out.restarts_used = runs.size();
  return out;
}

GPResult minimize_gp(const ModelSpec& spec, const GPOptions& opts) {
  return best_run(minimize_gp_runs(spec, opts));
}

GPResult minimize_gp_in_sector(const ModelSpec& spec, int winding, const GPOptions& opts) {
  require_stable(spec);
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.max_iter = opts.max_iter;
  fo.constrain = [winding](Field& f) { f = project_rotation_sector(f, winding); };
  FlowResult flow = sphere_flow(spec, {vortex_seed(spec.grid(), winding)}, fo);
  Field phi = std::move(flow.columns[0]);
  return package(spec, std::move(phi), flow, "sector:" + std::to_string(winding));
}

std::vector<GPResult> lowest_energy_family(const std::vector<GPResult>& runs,
                                           double energy_tol) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : runs)
    if (r.converged) best = std::min(best, r.energy);
  std::vector<GPResult> out;
  for (const auto& r : runs)
    if (r.converged && r.energy <= best + energy_tol) out.push_back(r);
  return out;
}

}  // namespace rotbec
