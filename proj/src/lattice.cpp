#include "rotbec/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "rotbec/errors.hpp"

namespace rotbec {

namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct Grid::Spectral {
  fftw_plan forward_plan = nullptr;
  fftw_plan backward_plan = nullptr;
  std::array<std::vector<double>, 3> coords;
  std::array<std::vector<double>, 3> wavenumbers;
  std::vector<double> k_squared;

  Spectral() = default;
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;
  ~Spectral() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan) fftw_destroy_plan(forward_plan);
    if (backward_plan) fftw_destroy_plan(backward_plan);
  }
};

Grid::Grid(int dim, std::vector<double> half_width, std::vector<int> points)
    : dim_(dim) {
  if (dim != 2 && dim != 3) throw ConfigError("grid dimension must be 2 or 3");
  if (half_width.size() == 1) half_width.assign(dim, half_width[0]);
  if (points.size() == 1) points.assign(dim, points[0]);
  if (static_cast<int>(half_width.size()) != dim ||
      static_cast<int>(points.size()) != dim)
    throw ConfigError("grid extents must have one entry per axis");

  auto spectral = std::make_shared<Spectral>();
  size_ = 1;
  for (int a = 0; a < dim; ++a) {
    if (!(half_width[a] > 0.0) || !std::isfinite(half_width[a]))
      throw ConfigError("grid half width must be positive");
    if (points[a] < 8 || points[a] % 2 != 0)
      throw ConfigError("grid points per axis must be even and >= 8");
    half_width_[a] = half_width[a];
    points_[a] = points[a];
    spacing_[a] = 2.0 * half_width[a] / points[a];
    size_ *= static_cast<std::size_t>(points[a]);

    const int n = points[a];
    auto& x = spectral->coords[a];
    auto& k = spectral->wavenumbers[a];
    x.resize(n);
    k.resize(n);
    for (int i = 0; i < n; ++i) {
      x[i] = -half_width[a] + i * spacing_[a];
      const int m = i < n / 2 ? i : i - n;
      k[i] = std::numbers::pi * m / half_width[a];
    }
  }
  std::size_t s = 1;
  for (int a = dim - 1; a >= 0; --a) {
    strides_[a] = s;
    s *= points_[a];
  }

  spectral->k_squared.resize(size_);
  for (std::size_t idx = 0; idx < size_; ++idx) {
    const auto ijk = unravel(idx);
    double k2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double k = spectral->wavenumbers[a][ijk[a]];
      k2 += k * k;
    }
    spectral->k_squared[idx] = k2;
  }

  {
    std::lock_guard lock(planner_mutex());
    std::vector<cplx> scratch(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    spectral->forward_plan =
        fftw_plan_dft(dim, points_.data(), buf, buf, FFTW_FORWARD, flags);
    spectral->backward_plan =
        fftw_plan_dft(dim, points_.data(), buf, buf, FFTW_BACKWARD, flags);
  }
  if (!spectral->forward_plan || !spectral->backward_plan)
    throw std::runtime_error("FFTW planning failed");
  spectral_ = std::move(spectral);
}

Grid Grid::cube(int dim, double half_width, int points) {
  return Grid(dim, {half_width}, {points});
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing_[a];
  return v;
}

double Grid::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= 2.0 * half_width_[a];
  return v;
}

std::span<const double> Grid::coordinates(int axis) const {
  return spectral_->coords[axis];
}

std::span<const double> Grid::wavenumbers(int axis) const {
  return spectral_->wavenumbers[axis];
}

std::span<const double> Grid::k_squared() const { return spectral_->k_squared; }

std::array<int, 3> Grid::unravel(std::size_t index) const {
  std::array<int, 3> ijk{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    ijk[a] = static_cast<int>(index / strides_[a]);
    index %= strides_[a];
  }
  return ijk;
}

Point Grid::point(std::size_t index) const {
  const auto ijk = unravel(index);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = spectral_->coords[a][ijk[a]];
  return p;
}

Point Grid::odd_point(std::size_t index) const {
  const auto ijk = unravel(index);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = ijk[a] == 0 ? 0.0 : spectral_->coords[a][ijk[a]];
  return p;
}

void Grid::forward(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  auto* buf = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(spectral_->forward_plan, buf, buf);
}

void Grid::backward(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  auto* buf = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(spectral_->backward_plan, buf, buf);
  const double scale = 1.0 / static_cast<double>(size_);
  for (auto& v : out) v *= scale;
}

bool Grid::operator==(const Grid& other) const {
  if (spectral_ == other.spectral_) return true;
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (points_[a] != other.points_[a]) return false;
    if (half_width_[a] != other.half_width_[a]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Field::Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}

Field::Field(Grid grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("field size does not match grid");
}

Field& Field::operator+=(const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(cplx s, const Field& other) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
  return *this;
}

double Field::norm_squared() const {
  double s = 0.0;
  for (const auto& v : values_) s += std::norm(v);
  return s * grid_.cell_volume();
}

double Field::norm() const { return std::sqrt(norm_squared()); }

std::vector<double> Field::density() const {
  std::vector<double> rho(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) rho[i] = std::norm(values_[i]);
  return rho;
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx s, Field a) { return a *= s; }

cplx inner(const Field& a, const Field& b) {
  cplx s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += std::conj(av[i]) * bv[i];
  return s * a.grid().cell_volume();
}

double integrate(const Grid& grid, std::span<const double> density) {
  double s = 0.0;
  for (double v : density) s += v;
  return s * grid.cell_volume();
}

Field gradient_spectral(const Field& phi, int axis) {
  const Grid& g = phi.grid();
  Field out(g);
  g.forward(phi.values(), out.values());
  const auto k = g.wavenumbers(axis);
  const int n = g.points(axis);
  const std::size_t stride = g.stride(axis);
  auto v = out.values();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const int i = static_cast<int>((idx / stride) % n);
    v[idx] *= (i == n / 2) ? cplx(0.0) : cplx(0.0, k[i]);
  }
  g.backward(out.values(), out.values());
  return out;
}

Field laplacian_spectral(const Field& phi) {
  const Grid& g = phi.grid();
  Field out(g);
  g.forward(phi.values(), out.values());
  const auto k2 = g.k_squared();
  auto v = out.values();
  for (std::size_t idx = 0; idx < g.size(); ++idx) v[idx] *= -k2[idx];
  g.backward(out.values(), out.values());
  return out;
}

double spectral_norm_squared(const Field& phi) {
  const Grid& g = phi.grid();
  std::vector<cplx> coeffs(g.size());
  g.forward(phi.values(), coeffs);
  double s = 0.0;
  for (const auto& c : coeffs) s += std::norm(c);
  return s * g.cell_volume() / static_cast<double>(g.size());
}

Field rotate_quarter_turn(const Field& phi) {
  const Grid& g = phi.grid();
  if (g.points(0) != g.points(1) || g.half_width(0) != g.half_width(1))
    throw std::invalid_argument("quarter-turn rotation needs a square cross-section");
  const int n = g.points(0);
  const int nz = g.dim() == 3 ? g.points(2) : 1;
  Field out(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < nz; ++k) {
        const std::size_t dst = i * g.stride(0) + j * g.stride(1) + (g.dim() == 3 ? k : 0);
        const std::size_t src =
            j * g.stride(0) + ((n - i) % n) * g.stride(1) + (g.dim() == 3 ? k : 0);
        out[dst] = phi[src];
      }
  return out;
}

}  // namespace rotbec
