#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rotbec/errors.hpp"
#include "support.hpp"

using namespace rotbec;
using rotbec::testing::pi;
using rotbec::testing::random_field;

TEST_CASE("grid geometry") {
  const Grid g(3, {4.0, 5.0, 6.0}, {8, 10, 12});
  for (int a = 0; a < 3; ++a) CHECK(g.spacing(a) * g.points(a) == doctest::Approx(2 * g.half_width(a)).epsilon(1e-15));
  CHECK(g.size() == 8u * 10u * 12u);
  CHECK(g.volume() == doctest::Approx(8.0 * 10.0 * 12.0).epsilon(1e-14));
  CHECK(g.coordinates(0)[0] == -4.0);
  CHECK(g.wavenumbers(1)[1] == doctest::Approx(pi / 5.0));

  CHECK_THROWS_AS(Grid(2, {4.0, 4.0}, {7, 8}), ConfigError);
  CHECK_THROWS_AS(Grid(2, {4.0, 4.0}, {6, 6}), ConfigError);
  CHECK_THROWS_AS(Grid(4, {1, 1, 1, 1}, {8, 8, 8, 8}), ConfigError);
  CHECK_THROWS_AS(Grid(2, {-1.0, 4.0}, {8, 8}), ConfigError);
}

TEST_CASE("integrate") {
  SUBCASE("constant over a square box") {
    const Grid g = Grid::cube(2, 4.0, 32);
    const std::vector<double> one(g.size(), 1.0);
    CHECK(integrate(g, one) == doctest::Approx(64.0).epsilon(1e-14));
  }
  SUBCASE("three-dimensional Gaussian") {
    const Grid g = Grid::cube(3, 8.0, 64);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point p = g.point(i);
      f[i] = std::exp(-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    }
    CHECK(std::abs(integrate(g, f) / std::pow(pi, 1.5) - 1.0) < 1e-10);
  }
  SUBCASE("zero") {
    const Grid g = Grid::cube(2, 3.0, 16);
    CHECK(integrate(g, std::vector<double>(g.size(), 0.0)) == 0.0);
  }
}

TEST_CASE("spectral derivatives of plane waves") {
  const Grid g = Grid::cube(2, 4.0, 32);
  const double k0 = pi * 3 / 4.0;
  const Field wave = Field::from_function(g, [&](const Point& p) { return std::exp(cplx(0, k0 * p[0])); });
  const Field dx = gradient_spectral(wave, 0);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(dx[i] - cplx(0, k0) * wave[i]));
  CHECK(err < 1e-12);

  const Field lap = laplacian_spectral(wave);
  err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(lap[i] + k0 * k0 * wave[i]));
  CHECK(err < 1e-11);

  const Field c = Field::from_function(g, [](const Point&) { return cplx(2.5, -1.0); });
  CHECK(gradient_spectral(c, 1).norm() < 1e-13);
  CHECK(laplacian_spectral(c).norm() < 1e-13);
}

TEST_CASE("derivative along y of sin(k0 x) exp(-y^2)") {
  const Grid g = Grid::cube(2, 8.0, 64);
  const double k0 = pi * 2 / 8.0;
  const Field f = Field::from_function(g, [&](const Point& p) {
    return cplx(std::sin(k0 * p[0]) * std::exp(-p[1] * p[1]), 0.0);
  });
  const Field dy = gradient_spectral(f, 1);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    err = std::max(err, std::abs(dy[i] - std::sin(k0 * p[0]) * -2.0 * p[1] * std::exp(-p[1] * p[1])));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("Laplacian of a Gaussian") {
  for (int dim : {2, 3}) {
    const Grid g = Grid::cube(dim, 10.0, dim == 2 ? 96 : 48);
    const Field f = Field::from_function(g, [](const Point& p) {
      return cplx(std::exp(-0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])), 0.0);
    });
    const Field lap = laplacian_spectral(f);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point p = g.point(i);
      const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
      err = std::max(err, std::abs(lap[i] - (r2 - dim) * std::exp(-0.5 * r2)));
    }
    CHECK(err < 1e-8);
  }
}

TEST_CASE("Parseval") {
  for (int dim : {2, 3}) {
    const Grid g = Grid::cube(dim, 5.0, 16);
    const Field f = random_field(g, 11 + dim, 0.0);
    CHECK(std::abs(spectral_norm_squared(f) / f.norm_squared() - 1.0) < 1e-12);
  }
}

TEST_CASE("integration by parts and linearity") {
  const Grid g = Grid::cube(2, 6.0, 32);
  const Field a = random_field(g, 1, 0.1), b = random_field(g, 2, 0.1);
  const cplx lhs = inner(a, laplacian_spectral(b));
  const cplx rhs = inner(laplacian_spectral(a), b);
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));

  const cplx s(0.3, -1.7);
  const Field combo = gradient_spectral(a + s * b, 0);
  const Field split = gradient_spectral(a, 0) + s * gradient_spectral(b, 0);
  CHECK(rotbec::testing::max_abs_diff(combo, split) < 1e-10);

  const Field xy = gradient_spectral(gradient_spectral(a, 0), 1);
  const Field yx = gradient_spectral(gradient_spectral(a, 1), 0);
  CHECK(rotbec::testing::max_abs_diff(xy, yx) < 1e-10);
}

TEST_CASE("first derivatives stay anti-Hermitian") {
  const Grid g = Grid::cube(2, 6.0, 16);
  const Field a = random_field(g, 5, 0.0), b = random_field(g, 6, 0.0);
  for (int axis : {0, 1}) {
    const cplx lhs = inner(a, gradient_spectral(b, axis));
    const cplx rhs = -inner(gradient_spectral(a, axis), b);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("field arithmetic and quarter turns") {
  const Grid g = Grid::cube(2, 4.0, 16);
  const Field a = random_field(g, 3);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a.all_finite());
  Field r = a;
  for (int k = 0; k < 4; ++k) r = rotate_quarter_turn(r);
  CHECK(rotbec::testing::max_abs_diff(r, a) == 0.0);
  CHECK(rotate_quarter_turn(a).norm() == doctest::Approx(1.0).epsilon(1e-14));

  // phi(x, y) = x  ->  rotated(x, y) = phi(y, -x) = y
  const Field x = Field::from_function(g, [](const Point& p) { return cplx(p[0], 0); });
  const Field rx = rotate_quarter_turn(x);
  const auto c = g.coordinates(1);
  CHECK(rx[g.stride(0) * 5 + 9] == cplx(c[9], 0));

  Field bad(g, std::vector<cplx>(g.size(), cplx(std::nan(""), 0.0)));
  CHECK_FALSE(bad.all_finite());
  CHECK_THROWS(Field(g, std::vector<cplx>(3)));
}
