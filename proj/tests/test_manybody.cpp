#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <numeric>
#include <random>

#include "rotbec/errors.hpp"
#include "rotbec/gp.hpp"
#include "rotbec/manybody.hpp"
#include "support.hpp"

using namespace rotbec;
using namespace rotbec::testing;

namespace {

// Random W with W_ijkl = W_jilk = conj(W_klij).
FockProblem random_problem(int m, int n, unsigned seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FockProblem p;
  p.modes = m;
  p.particles = n;
  for (int j = 0; j < m; ++j) p.energies.push_back(j + 0.3 * g(rng));
  std::vector<cplx> a(static_cast<std::size_t>(m) * m * m * m);
  for (auto& v : a) v = scale * cplx(g(rng), g(rng));
  p.w.resize(a.size());
  auto at = [&](int i, int j, int k, int l) { return a[p.index(i, j, k, l)]; };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
          p.W(i, j, k, l) = 0.25 * (at(i, j, k, l) + at(j, i, l, k) + std::conj(at(k, l, i, j)) + std::conj(at(l, k, j, i)));
  return p;
}

// First-quantized Hamiltonian on the N-fold tensor power and the lowest
// eigenvalue of its restriction to symmetric tensors.
double symmetric_ground_by_projection(const FockProblem& p) {
  const int m = p.modes, n = p.particles;
  int dim = 1;
  for (int q = 0; q < n; ++q) dim *= m;
  auto digits = [&](int s) {
    std::vector<int> d(n);
    for (int q = n - 1; q >= 0; --q, s /= m) d[q] = s % m;
    return d;
  };
  auto index = [&](const std::vector<int>& d) {
    int s = 0;
    for (int x : d) s = s * m + x;
    return s;
  };
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    const auto d = digits(s);
    for (int q = 0; q < n; ++q) h(s, s) += p.energies[d[q]];
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r) {
        if (q == r) continue;
        // (1/2) sum over ordered pairs: particle q goes k -> i, particle r goes l -> j.
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            auto t = d;
            t[q] = i;
            t[r] = j;
            h(index(t), s) += 0.5 * p.W(i, j, d[q], d[r]);
          }
      }
  }
  Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int count = 0;
  do {
    for (int s = 0; s < dim; ++s) {
      const auto d = digits(s);
      std::vector<int> t(n);
      for (int q = 0; q < n; ++q) t[q] = d[perm[q]];
      sym(index(t), s) += 1.0;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  sym /= static_cast<double>(count);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ps(sym);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < dim; ++c)
    if (ps.eigenvalues()(c) > 0.5) keep.push_back(c);
  Eigen::MatrixXcd b(dim, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = ps.eigenvectors().col(keep[c]);
  const Eigen::MatrixXcd reduced = b.adjoint() * h * b;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(reduced, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("occupation basis") {
  for (int m = 1; m <= 6; ++m)
    for (int n = 1; n <= 10; ++n) CHECK(bosonic_dimension(m, n) == static_cast<std::size_t>(binomial(n + m - 1, n)));
  const auto b = occupation_basis(3, 4);
  CHECK(b.size() == 15);
  CHECK(std::is_sorted(b.begin(), b.end()));
  CHECK(std::adjacent_find(b.begin(), b.end()) == b.end());
  for (const auto& v : b) CHECK(std::accumulate(v.begin(), v.end(), 0) == 4);
}

TEST_CASE("ground state against the symmetrized tensor power") {
  for (auto [m, n, seed] : {std::tuple{2, 2, 1u}, {3, 2, 2u}, {3, 3, 3u}, {2, 5, 4u}, {4, 3, 5u}}) {
    const FockProblem p = random_problem(m, n, seed);
    CHECK(p.symmetry_defect() < 1e-15);
    const FockResult r = ground_state_bosonic(p);
    CHECK(r.e0 == doctest::Approx(symmetric_ground_by_projection(p)).epsilon(1e-9));
    CHECK(r.residual <= 1e-8);
    CHECK(ground_state_absolute(p) <= r.e0 + 1e-9);

    CHECK(r.gamma1.trace().real() == doctest::Approx(n).epsilon(1e-10));
    CHECK((r.gamma1 - r.gamma1.adjoint()).norm() < 1e-12);
    const Eigen::VectorXd occ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r.gamma1).eigenvalues();
    CHECK(occ.minCoeff() >= -1e-10);
    CHECK(r.condensate_fraction == doctest::Approx(occ.maxCoeff() / n).epsilon(1e-12));
    CHECK(r.condensate_fraction <= 1.0 + 1e-12);
    CHECK(r.ground_vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("closed-form Fock problems") {
  SUBCASE("no interaction") {
    FockProblem p = random_problem(3, 4, 9);
    std::fill(p.w.begin(), p.w.end(), cplx(0.0));
    const FockResult r = ground_state_bosonic(p);
    CHECK(r.e0 == doctest::Approx(4 * *std::min_element(p.energies.begin(), p.energies.end())).epsilon(1e-10));
    CHECK(r.condensate_fraction == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ground_state_absolute(p) == doctest::Approx(r.e0).epsilon(1e-10));
  }
  SUBCASE("single-mode interaction: U n (n - 1) / 2") {
    FockProblem p;
    p.modes = 2;
    p.particles = 4;
    p.energies = {0.0, 5.0};
    p.w.assign(16, 0.0);
    p.W(0, 0, 0, 0) = 0.4;
    CHECK(ground_state_bosonic(p).e0 == doctest::Approx(0.4 * 4 * 3 / 2).epsilon(1e-10));
  }
}

TEST_CASE("Fock validation") {
  FockProblem p = random_problem(3, 3, 1);
  p.W(0, 1, 2, 0) += 0.1;
  CHECK_THROWS_AS(validate(p), InvalidState);
  CHECK_THROWS_AS(validate(random_problem(7, 2, 1)), InvalidState);
  CHECK_THROWS_AS(validate(random_problem(2, 11, 1)), InvalidState);
  FockProblem short_e = random_problem(3, 3, 1);
  short_e.energies.pop_back();
  CHECK_THROWS_AS(validate(short_e), InvalidState);
  CHECK_THROWS_AS(ground_state_absolute(random_problem(6, 6, 1)), DimensionTooLarge);
}

TEST_CASE("interaction tensors from grid modes") {
  const ModelSpec spec = harmonic2d(6.0, 32, 0.5, 0.0);
  const auto pairs = lowest_eigenpairs(spec, 3);
  std::vector<Field> modes;
  for (const auto& e : pairs) modes.push_back(e.field);

  const auto contact = build_w_tensor(modes, PairPotential::contact(0.1));
  FockProblem p = make_problem(pairs, 2, PairPotential::contact(0.1));
  CHECK(p.symmetry_defect() < 1e-14);
  CHECK(p.w == contact);
  const auto rho = pairs[0].field.density();
  double q = 0.0;
  for (double r : rho) q += r * r;
  CHECK(p.W(0, 0, 0, 0).real() == doctest::Approx(8 * pi * 0.1 * q * spec.grid().cell_volume()).epsilon(1e-12));

  // Single oscillator mode: 8 pi a / (2 pi).
  const auto ground = make_problem({pairs[0]}, 2, PairPotential::contact(0.1));
  CHECK(ground.W(0, 0, 0, 0).real() == doctest::Approx(0.4).epsilon(1e-6));

  const FockProblem gauss = make_problem(pairs, 2, PairPotential::gaussian(0.3));
  CHECK(gauss.symmetry_defect() < 1e-12);
  CHECK(gauss.W(0, 0, 0, 0).real() > 0.0);
  const FockProblem none = make_problem(pairs, 2, PairPotential::none());
  for (const auto& v : none.w) CHECK(v == cplx(0.0));
}

TEST_CASE("truncated GP energy") {
  const ModelSpec spec = harmonic2d(6.0, 32, 0.5, 0.0);
  const auto pairs = lowest_eigenpairs(spec, 3);
  CHECK(truncated_gp_energy(pairs, 0.0) == doctest::Approx(pairs[0].energy).epsilon(1e-12));

  // Any unit coefficient vector gives an upper bound.
  const double g = 2.0;
  const double e = truncated_gp_energy(pairs, g);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int t = 0; t < 30; ++t) {
    Field f(spec.grid());
    std::vector<cplx> c(3);
    for (auto& x : c) x = cplx(n(rng), n(rng));
    for (int j = 0; j < 3; ++j) f.axpy(c[j], pairs[j].field);
    f *= 1.0 / f.norm();
    CHECK(e <= gp_energy(spec.with_coupling(g), f).total + 1e-10);
  }
  CHECK(e <= gp_energy(spec.with_coupling(g), pairs[0].field).total + 1e-12);
}

TEST_CASE("approach to the GP limit") {
  const ModelSpec spec = harmonic2d(6.0, 32, 0.5, 0.0);
  const auto rows = gp_limit_scan(spec, 3, 0.5, {2, 4, 6, 8}, true);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].a == doctest::Approx(0.5 / rows[i].n));
    CHECK(rows[i].e0_over_n <= rows[i].e_gp_truncated + 1e-10);
    if (i > 0) {
      CHECK(rows[i].e_gp_truncated - rows[i].e0_over_n < rows[i - 1].e_gp_truncated - rows[i - 1].e0_over_n);
      CHECK(rows[i].condensate_fraction > rows[i - 1].condensate_fraction);
    }
  }
  CHECK(rows[0].e_abs.has_value());
  CHECK(*rows[0].e_abs <= rows[0].e0_over_n * 2 + 1e-9);
  CHECK(rows[3].e_abs.has_value());
  CHECK_FALSE(gp_limit_scan(spec, 3, 0.5, {10}, true)[0].e_abs.has_value());
  CHECK_THROWS_AS(gp_limit_scan(spec, 3, 0.5, {1}), InvalidState);
}

TEST_CASE("coherent states") {
  const cplx z(1.0, 1.0);
  const Eigen::VectorXcd v = coherent_vector(64, z);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(v(3) - std::exp(-1.0) * std::pow(z, 3) / std::sqrt(6.0)) < 1e-15);

  const CoherentReport r = coherent_state_checks(64, z, 8.0, 8, 512, 256);
  CHECK(std::abs(r.mean_a - z) < 1e-12);
  CHECK(r.mean_number == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.norm == doctest::Approx(1.0).epsilon(1e-14));

  // Midpoint rule: errors fall by 4 per radial doubling.
  const CoherentReport fine = coherent_state_checks(64, z, 8.0, 8, 1024, 256);
  CHECK(r.completeness_error / fine.completeness_error == doctest::Approx(4.0).epsilon(0.01));
  CHECK(r.upper_symbol_error / fine.upper_symbol_error == doctest::Approx(4.0).epsilon(0.01));
  CHECK(fine.weighted_error < 1e-8);

  // A small disc leaves the incomplete-gamma tail.
  const double radius = 3.0;
  const CoherentReport cut = coherent_state_checks(64, z, radius, 8, 2048, 256);
  double c = 0.0, u = 0.0, w = 0.0;
  for (int n = 0; n <= 8; ++n) {
    const double p1 = boost::math::gamma_p(n + 1.0, radius * radius);
    const double p2 = boost::math::gamma_p(n + 2.0, radius * radius);
    c = std::max(c, 1.0 - p1);
    u = std::max(u, std::abs((n + 1) * p2 - p1 - n));
    w = std::max(w, (n + 1) * (1.0 - p2));
  }
  CHECK(cut.completeness_error == doctest::Approx(c).epsilon(1e-5));
  CHECK(cut.upper_symbol_error == doctest::Approx(u).epsilon(1e-5));
  CHECK(cut.weighted_error == doctest::Approx(w).epsilon(1e-5));

  CHECK_THROWS_AS(coherent_state_checks(8, z, 8.0, 8), InvalidState);
}
