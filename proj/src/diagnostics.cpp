#include "rotbec/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rotbec/errors.hpp"
#include "rotbec/field_io.hpp"

namespace rotbec {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kRings = 256;

// Index of the z = 0 plane (0 in two dimensions).
std::size_t mid_plane(const Grid& g) { return g.dim() == 3 ? static_cast<std::size_t>(g.points(2) / 2) : 0; }

std::size_t at(const Grid& g, int i, int j) {
  return static_cast<std::size_t>(i) * g.stride(0) + static_cast<std::size_t>(j) * g.stride(1) +
         mid_plane(g);
}

Grid plane_grid(const Grid& g) {
  return Grid(2, {g.half_width(0), g.half_width(1)}, {g.points(0), g.points(1)});
}

// |phi|^2 in 2D, the column density integral |phi|^2 dz in 3D.
std::vector<double> planar_density(const Field& phi) {
  const Grid& g = phi.grid();
  const auto rho = phi.density();
  if (g.dim() == 2) return rho;
  const int n0 = g.points(0), n1 = g.points(1), n2 = g.points(2);
  std::vector<double> col(static_cast<std::size_t>(n0) * n1, 0.0);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      double s = 0.0;
      for (int k = 0; k < n2; ++k) s += rho[i * g.stride(0) + j * g.stride(1) + k];
      col[static_cast<std::size_t>(i) * n1 + j] = s * g.spacing(2);
    }
  return col;
}

// Spectral weight of the density per distinct |k|, for ring averages.
struct RadialSpectrum {
  std::vector<double> k;
  std::vector<double> weight;

  RadialSpectrum(const Grid& plane, std::span<const double> density) {
    const std::size_t n = plane.size();
    std::vector<cplx> c(density.begin(), density.end());
    plane.forward(c, c);
    const auto kx = plane.wavenumbers(0), ky = plane.wavenumbers(1);
    const double lx = plane.half_width(0), ly = plane.half_width(1);
    std::vector<std::pair<double, double>> terms;
    terms.reserve(n);
    for (int i = 0; i < plane.points(0); ++i)
      for (int j = 0; j < plane.points(1); ++j) {
        const cplx coef = c[static_cast<std::size_t>(i) * plane.stride(0) + j];
        // Grid coordinates start at -L: shift the phase to the origin.
        const double re = (coef * std::polar(1.0, kx[i] * lx + ky[j] * ly)).real();
        terms.emplace_back(std::hypot(kx[i], ky[j]), re / static_cast<double>(n));
      }
    std::sort(terms.begin(), terms.end());
    for (const auto& [kk, w] : terms) {
      if (!k.empty() && std::abs(kk - k.back()) <= 1e-12 * std::max(1.0, kk))
        weight.back() += w;
      else {
        k.push_back(kk);
        weight.push_back(w);
      }
    }
  }

  void evaluate(double r, double& value, double& slope) const {
    value = 0.0;
    slope = 0.0;
    for (std::size_t a = 0; a < k.size(); ++a) {
      const double x = k[a] * r;
      value += weight[a] * std::cyl_bessel_j(0.0, x);
      if (k[a] > 0.0) slope -= weight[a] * k[a] * std::cyl_bessel_j(1.0, x);
    }
  }
};

}  // namespace

std::size_t VortexReport::count(int winding) const {
  return static_cast<std::size_t>(std::count_if(vortices.begin(), vortices.end(),
                                                [winding](const Vortex& v) { return v.winding == winding; }));
}

double angular_momentum_z(const Field& phi) {
  const Grid& g = phi.grid();
  const Field dx = gradient_spectral(phi, 0);
  const Field dy = gradient_spectral(phi, 1);
  cplx s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.odd_point(i);
    s += std::conj(phi[i]) * cplx(0.0, -1.0) * (p[0] * dy[i] - p[1] * dx[i]);
  }
  return s.real() * g.cell_volume();
}

VortexReport detect_vortices(const Field& phi, std::optional<double> floor) {
  const Grid& g = phi.grid();
  VortexReport rep;
  const int n0 = g.points(0), n1 = g.points(1);
  double peak = 0.0;
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) peak = std::max(peak, std::norm(phi[at(g, i, j)]));
  rep.density_floor_used = floor.value_or(1e-6 * peak);
  const auto xs = g.coordinates(0), ys = g.coordinates(1);

  // The grid is periodic, so plaquettes and rings wrap across the box edge.
  auto wrap = [](int i, int n) { return (i % n + n) % n; };
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      const int ip = wrap(i + 1, n0), jp = wrap(j + 1, n1);
      // Counter-clockwise in the (x, y) plane.
      const cplx c[4] = {phi[at(g, i, j)], phi[at(g, ip, j)], phi[at(g, ip, jp)], phi[at(g, i, jp)]};
      bool dense = true;
      for (const cplx& v : c) dense = dense && std::norm(v) > rep.density_floor_used;
      if (!dense) continue;
      double circulation = 0.0;
      for (int e = 0; e < 4; ++e) circulation += std::arg(c[(e + 1) % 4] * std::conj(c[e]));
      const int w = static_cast<int>(std::lround(circulation / (2.0 * kPi)));
      if (w == 0) continue;
      rep.vortices.push_back({xs[i] + 0.5 * g.spacing(0), ys[j] + 0.5 * g.spacing(1), w});
      rep.total_winding += w;
    }

  // A core sitting exactly on a node empties all four plaquettes around it.
  static constexpr int ring[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {1, 0},
                                     {1, 1},   {0, 1},  {-1, 1}, {-1, 0}};
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      if (std::norm(phi[at(g, i, j)]) > rep.density_floor_used) continue;
      cplx c[8];
      bool dense = true;
      for (int e = 0; e < 8; ++e) {
        c[e] = phi[at(g, wrap(i + ring[e][0], n0), wrap(j + ring[e][1], n1))];
        dense = dense && std::norm(c[e]) > rep.density_floor_used;
      }
      if (!dense) continue;
      double circulation = 0.0;
      for (int e = 0; e < 8; ++e) circulation += std::arg(c[(e + 1) % 8] * std::conj(c[e]));
      const int w = static_cast<int>(std::lround(circulation / (2.0 * kPi)));
      if (w == 0) continue;
      rep.vortices.push_back({xs[i], ys[j], w});
      rep.total_winding += w;
    }
  rep.lz_expectation = angular_momentum_z(phi);
  return rep;
}

std::vector<double> ring_average(const Grid& grid, std::span<const double> density,
                                 std::span<const double> radii) {
  const RadialSpectrum spec(grid, density);
  std::vector<double> out;
  for (double r : radii) {
    double v, s;
    spec.evaluate(r, v, s);
    out.push_back(v);
  }
  return out;
}

double symmetry_breaking_metric(const Field& phi, const ModelSpec& spec) {
  const auto& w = spec.rotation().omega;
  if (!spec.axisymmetric() || w[0] != 0.0 || w[1] != 0.0)
    throw NotAxisymmetricTrap("symmetry metric needs a trap symmetric about the z axis");
  const Grid& g = phi.grid();
  const Grid plane = plane_grid(g);
  const auto rho = planar_density(phi);
  const RadialSpectrum radial(plane, rho);

  // Ring values and slopes, then cubic Hermite interpolation in r. Circles
  // leaving the inscribed disc would wrap onto periodic images, so density
  // outside it counts as deviation.
  const double r_max = std::min(g.half_width(0), g.half_width(1));
  const double dr = r_max / (kRings - 1);
  std::vector<double> value(kRings), slope(kRings);
  for (int a = 0; a < kRings; ++a) radial.evaluate(a * dr, value[a], slope[a]);

  const auto xs = plane.coordinates(0), ys = plane.coordinates(1);
  double diff = 0.0, total = 0.0;
  for (int i = 0; i < plane.points(0); ++i)
    for (int j = 0; j < plane.points(1); ++j) {
      const double r = std::hypot(xs[i], ys[j]);
      const double d = rho[static_cast<std::size_t>(i) * plane.stride(0) + j];
      total += std::abs(d);
      if (r > r_max) {
        diff += std::abs(d);
        continue;
      }
      const int a = std::min(kRings - 2, static_cast<int>(r / dr));
      const double t = r / dr - a;
      const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
      const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
      const double avg = h00 * value[a] + h10 * dr * slope[a] + h01 * value[a + 1] +
                         h11 * dr * slope[a + 1];
      diff += std::abs(d - avg);
    }
  return total > 0.0 ? diff / total : 0.0;
}

double density_distance(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw InvalidState("density_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(std::norm(a[i]) - std::norm(b[i]));
  return s * a.grid().cell_volume();
}

SymmetryReport minimizer_family_analysis(const ModelSpec& spec,
                                         const std::vector<GPResult>& results,
                                         double energy_tol, double distance_tol) {
  SymmetryReport rep;
  rep.cluster_of.assign(results.size(), -1);
  const GPResult* best = nullptr;
  for (const auto& r : results)
    if (r.converged && (!best || r.energy < best->energy)) best = &r;
  if (!best) return rep;

  std::vector<std::size_t> family;
  for (std::size_t i = 0; i < results.size(); ++i)
    if (results[i].converged && results[i].energy <= best->energy + energy_tol) family.push_back(i);

  std::vector<std::size_t> parent(family.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < family.size(); ++a)
    for (std::size_t b = a + 1; b < family.size(); ++b) {
      const double d = density_distance(results[family[a]].phi, results[family[b]].phi);
      rep.pairwise_density_distances.push_back(d);
      if (d <= distance_tol) parent[root(a)] = root(b);
    }
  std::vector<int> label(family.size(), -1);
  int clusters = 0;
  for (std::size_t a = 0; a < family.size(); ++a) {
    const std::size_t r = root(a);
    if (label[r] < 0) label[r] = clusters++;
    rep.cluster_of[family[a]] = label[r];
  }
  rep.n_distinct_minimizers = static_cast<std::size_t>(clusters);

  const auto& w = spec.rotation().omega;
  if (spec.axisymmetric() && w[0] == 0.0 && w[1] == 0.0)
    rep.azimuthal_deviation = symmetry_breaking_metric(best->phi, spec);
  return rep;
}

void write_density_image(const std::filesystem::path& path, const Field& phi,
                         const std::string& comment) {
  const Grid& g = phi.grid();
  const int n0 = g.points(0), n1 = g.points(1);
  std::vector<double> img(static_cast<std::size_t>(n0) * n1);
  double peak = 0.0;
  for (int r = 0; r < n1; ++r)
    for (int c = 0; c < n0; ++c) {
      const double d = std::norm(phi[at(g, c, n1 - 1 - r)]);
      img[static_cast<std::size_t>(r) * n0 + c] = d;
      peak = std::max(peak, d);
    }
  write_pgm16(path, img, n1, n0, 0.0, peak > 0.0 ? peak : 1.0,
              comment.empty() ? "density" : "density " + comment);
}

void write_phase_image(const std::filesystem::path& path, const Field& phi,
                       const std::string& comment) {
  const Grid& g = phi.grid();
  const int n0 = g.points(0), n1 = g.points(1);
  std::vector<double> img(static_cast<std::size_t>(n0) * n1);
  for (int r = 0; r < n1; ++r)
    for (int c = 0; c < n0; ++c) img[static_cast<std::size_t>(r) * n0 + c] = std::arg(phi[at(g, c, n1 - 1 - r)]);
  write_pgm16(path, img, n1, n0, -kPi, kPi, comment.empty() ? "phase" : "phase " + comment);
}

}  // namespace rotbec
