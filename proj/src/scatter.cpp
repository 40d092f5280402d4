#include "rotbec/scatter.hpp"

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "rotbec/errors.hpp"

namespace rotbec {

namespace {

constexpr double kPi = std::numbers::pi;

// 1 / integral_{r0}^{r1} sin^2(pi (r - r0) / (r1 - r0)) r^2 dr
double shell_normalization(double r0, double r1) {
  const double width = r1 - r0;
  const double moment = (r1 * r1 * r1 - r0 * r0 * r0) / 6.0 - width * width * width / (4.0 * kPi * kPi);
  return 1.0 / moment;
}

struct Endpoint {
  double u;
  double du;
};

// Classical RK4 for (u, u') on [r0, r1] with `steps` equal steps.
Endpoint integrate(const RadialPotential& v, double r0, double r1, Endpoint start, int steps) {
  const double h = (r1 - r0) / steps;
  double u = start.u, du = start.du;
  for (int s = 0; s < steps; ++s) {
    const double r = r0 + s * h;
    const double vr = 0.5 * v(r), vm = 0.5 * v(r + 0.5 * h), ve = 0.5 * v(r + h);
    const double k1u = du, k1d = vr * u;
    const double k2u = du + 0.5 * h * k1d, k2d = vm * (u + 0.5 * h * k1u);
    const double k3u = du + 0.5 * h * k2d, k3d = vm * (u + 0.5 * h * k2u);
    const double k4u = du + h * k3d, k4d = ve * (u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    du += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    if (!(u > 0.0))
      throw NonFiniteScatteringLength(v.name() + ": zero-energy solution has a node (bound state)");
  }
  return {u, du};
}

double asymptote(const RadialPotential& v, double r, Endpoint e) {
  if (!(std::abs(e.du) > 1e-12 * std::abs(e.u) / std::max(r, 1.0)) || !std::isfinite(e.du))
    throw NonFiniteScatteringLength(v.name() + ": flat zero-energy solution");
  if (e.du < 0.0)
    throw NonFiniteScatteringLength(v.name() + ": zero-energy solution has a node (bound state)");
  return r - e.u / e.du;
}

}  // namespace

RadialPotential RadialPotential::hard_sphere(double radius) {
  if (!(radius >= 0.0)) throw ConfigError("hard sphere radius must be >= 0");
  return {PotentialKind::hard_sphere, 0.0, radius, 0.0};
}

RadialPotential RadialPotential::square_well(double height, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(height)) throw ConfigError("square well needs radius >= 0");
  return {PotentialKind::square_well, height, radius, 0.0};
}

RadialPotential RadialPotential::gaussian(double amplitude, double width) {
  if (!(width > 0.0) || !std::isfinite(amplitude)) throw ConfigError("gaussian needs width > 0");
  return {PotentialKind::gaussian, amplitude, width, 0.0};
}

RadialPotential RadialPotential::soft_shell(double inner_radius, double outer_radius,
                                            double multiplier) {
  if (!(inner_radius >= 0.0 && outer_radius > inner_radius) || !std::isfinite(multiplier))
    throw ConfigError("soft shell needs 0 <= inner radius < outer radius");
  return {PotentialKind::soft_shell, multiplier, outer_radius, inner_radius};
}

double RadialPotential::operator()(double r) const {
  switch (kind) {
    case PotentialKind::hard_sphere:
      return r < radius ? std::numeric_limits<double>::infinity() : 0.0;
    case PotentialKind::square_well:
      return r <= radius ? strength : 0.0;
    case PotentialKind::gaussian:
      return strength * std::exp(-(r * r) / (radius * radius));
    case PotentialKind::soft_shell: {
      if (r < inner_radius || r > radius) return 0.0;
      const double s = std::sin(kPi * (r - inner_radius) / (radius - inner_radius));
      return strength * shell_normalization(inner_radius, radius) * s * s;
    }
  }
  return 0.0;
}

double RadialPotential::range() const {
  if (kind == PotentialKind::gaussian) {
    const double a = std::abs(strength);
    return a > 1e-14 ? radius * std::sqrt(std::log(a / 1e-14)) : 0.0;
  }
  return radius;
}

std::string RadialPotential::name() const {
  switch (kind) {
    case PotentialKind::hard_sphere: return "hard_sphere";
    case PotentialKind::square_well: return "square_well";
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::soft_shell: return "soft_shell";
  }
  return "unknown";
}

double scattering_length(const RadialPotential& v) {
  if (v.kind == PotentialKind::hard_sphere) return v.radius;
  if (v.strength == 0.0) return 0.0;
  const double r1 = v.range();
  // The shell leaves u = r untouched below its inner radius.
  const double r0 = v.kind == PotentialKind::soft_shell ? v.inner_radius : 0.0;
  if (!(r1 > r0)) return 0.0;
  const Endpoint start{r0, 1.0};

  auto run = [&](int steps) {
    return asymptote(v, r1, integrate(v, r0, r1, start, steps));
  };
  int steps = 256;
  double prev = run(steps);
  for (; steps < (1 << 22);) {
    steps *= 2;
    const double next = run(steps);
    const double diff = std::abs(next - prev);
    prev = next;
    if (diff <= 1e-12 * std::max(1.0, std::abs(next))) break;
  }
  return prev;
}

RadialPotential scale_potential(const RadialPotential& w, double a) {
  if (!(a > 0.0)) throw ConfigError("scale factor must be > 0");
  RadialPotential out = w;
  switch (w.kind) {
    case PotentialKind::hard_sphere:
      out.radius = a * w.radius;
      break;
    case PotentialKind::square_well:
    case PotentialKind::gaussian:
      out.strength = w.strength / (a * a);
      out.radius = a * w.radius;
      break;
    case PotentialKind::soft_shell:
      // The unit shell's normalization scales like a^-3.
      out.strength = w.strength * a;
      out.radius = a * w.radius;
      out.inner_radius = a * w.inner_radius;
      break;
  }
  return out;
}

RadialPotential multiply_potential(const RadialPotential& w, double c) {
  if (w.kind == PotentialKind::hard_sphere)
    throw ConfigError("a hard sphere cannot be multiplied by a constant");
  RadialPotential out = w;
  out.strength *= c;
  return out;
}

double volume_integral(const RadialPotential& v) {
  if (v.kind == PotentialKind::hard_sphere)
    return v.radius > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  const double lo = v.kind == PotentialKind::soft_shell ? v.inner_radius : 0.0;
  const double hi = v.range();
  if (!(hi > lo)) return 0.0;
  auto f = [&](double r) { return 4.0 * kPi * r * r * v(r); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-15);
}

std::vector<BornRow> born_check(const RadialPotential& shell, const std::vector<double>& a_list) {
  std::vector<BornRow> rows;
  for (double a : a_list) {
    BornRow row;
    row.a = a;
    if (a != 0.0) {
      row.s_of_a = scattering_length(multiply_potential(shell, 2.0 * a));
      row.rel_deviation = std::abs(row.s_of_a - a) / std::abs(a);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rotbec
