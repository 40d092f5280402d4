// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <json.hpp>
#include <random>
#include <string>

#include "rotbec/cli.hpp"
#include "rotbec/diagnostics.hpp"
#include "rotbec/gp.hpp"
#include "rotbec/manybody.hpp"
#include "rotbec/scatter.hpp"
#include "support.hpp"

using namespace rotbec;
using namespace rotbec::testing;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

namespace tol {
constexpr double oscillator_rel = 1e-8;
constexpr double oscillator_seconds = 60;
constexpr double rotating_linear = 1e-6;
constexpr double rotating_seconds = 30;
constexpr double gradient_rel = 1e-6;
constexpr double uniqueness_energy = 1e-7;
constexpr double uniqueness_density = 1e-4;
constexpr double sweep_s_metric = 1e-2;
constexpr double sweep_seconds = 30 * 60;
constexpr double dm_gap = 1e-4;
constexpr double dm_weight = 1e-3;
constexpr double dm_order = 1e-8;
constexpr double fock_closed_form = 1e-10;
constexpr double condensate = 0.99;
constexpr double fock_seconds = 10 * 60;
constexpr double abs_equal = 1e-10;
constexpr double coherent_moment = 1e-10;
constexpr double coherent_quadrature = 1e-3;
constexpr double hard_sphere = 1e-8;
constexpr double scaling_rel = 1e-6;
constexpr double born_ratio = 0.6;
constexpr double shell_integral = 1e-10;
constexpr double lz = 1e-8;
}  // namespace tol

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, auto... v) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rotbec_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int run_sweep(const json& cfg, const fs::path& dir, int workers) {
  json c = cfg;
  c["outputs"]["directory"] = dir.string();
  const fs::path path = dir / "config.json";
  std::ofstream(path) << c.dump(2);
  return cli::run(std::vector<std::string>{"rotbec", "sweep", "--config", path.string(), "--workers",
                                           std::to_string(workers)});
}

// ---------------------------------------------------------------------------

Outcome oscillator_pin() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec(Grid::cube(3, 8.0, 64), Trap::harmonic({1.0, 1.0, 1.0}), {}, 0.0);
  const GPResult r = minimize_gp(spec);
  const double t = seconds_since(t0);
  const double rel = std::abs(r.energy - 3.0) / 3.0;
  o.require(rel <= tol::oscillator_rel, "energy");
  o.require(t < tol::oscillator_seconds, "runtime");
  o.note(fmt("E = %.12f, rel. error %.1e, %.1f s", r.energy, rel, t));
  return o;
}

Outcome rotating_linear_pin() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec = harmonic2d(8.0, 64, 1.0, 0.0);
  const GPResult r = minimize_gp(spec);
  const auto pairs = lowest_eigenpairs(spec, 3);
  const double t = seconds_since(t0);

  std::vector<double> levels;
  for (int nr = 0; nr < 4; ++nr)
    for (int m = -8; m <= 8; ++m) levels.push_back(2.0 * (2 * nr + std::abs(m) + 1) - m);
  std::sort(levels.begin(), levels.end());
  o.require(std::abs(r.energy - 2.0) <= tol::rotating_linear, "GP energy");
  for (int j = 0; j < 3; ++j) o.require(std::abs(pairs[j].energy - levels[j]) <= tol::rotating_linear, fmt("level %d", j));
  o.require(t < tol::rotating_seconds, "runtime");
  o.note(fmt("E = %.9f, levels %.7f %.7f %.7f against %g %g %g, %.1f s", r.energy, pairs[0].energy, pairs[1].energy,
             pairs[2].energy, levels[0], levels[1], levels[2], t));
  return o;
}

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const bool three = c % 5 == 4;
    const Grid grid = three ? Grid::cube(3, 5.0, 16) : Grid::cube(2, 6.0, 32);
    const double w = 1.9 * u(rng), g = 20.0 * u(rng);
    Trap trap = c % 3 == 0 ? Trap::quartic(std::vector<double>(grid.dim(), 0.8 + 0.4 * u(rng)), 0.2 * u(rng))
                           : Trap::harmonic(std::vector<double>(grid.dim(), 1.0));
    if (c % 3 != 0 && w > 1.8) trap = Trap::quartic(std::vector<double>(grid.dim(), 1.0), 0.1);
    const ModelSpec spec(grid, trap, RotationSpec::about_z(w), g);
    const Field a = random_field(grid, 100 + c, 0.3), dir = random_field(grid, 200 + c, 0.3);
    const double h = 1e-5;
    const double fd = (gp_functional(spec, a + h * dir) - gp_functional(spec, a - h * dir)) / (2 * h);
    const double exact = 2.0 * inner(dir, gp_gradient(spec, a)).real();
    const double rel = std::abs(fd - exact) / std::abs(exact);
    worst = std::max(worst, rel);
    o.require(rel < tol::gradient_rel, fmt("case %d", c));
  }
  o.note(fmt("20 cases, worst rel. error %.1e", worst));
  return o;
}

Outcome uniqueness() {
  Outcome o;
  const ModelSpec spec = harmonic2d(8.0, 64, 0.0, 10.0);
  GPOptions opt;
  opt.restarts = 10;
  opt.vortex_seeds = false;
  const auto runs = minimize_gp_runs(spec, opt);
  double lo = 1e300, hi = -1e300, dist = 0.0;
  for (const auto& r : runs) {
    o.require(r.converged, r.origin + " converged");
    lo = std::min(lo, r.energy);
    hi = std::max(hi, r.energy);
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t j = i + 1; j < runs.size(); ++j) dist = std::max(dist, density_distance(runs[i].phi, runs[j].phi));
  o.require(hi - lo < tol::uniqueness_energy, "energy spread");
  o.require(dist < tol::uniqueness_density, "density distance");
  o.note(fmt("%zu runs, spread %.1e, max L1 distance %.1e", runs.size(), hi - lo, dist));
  return o;
}

// Criteria 5 and 6 read the same sweep.
json sweep_config() {
  return {{"model", {{"dim", 2}, {"half_width", 8.0}, {"points", 64}, {"trap", {{"kind", "harmonic"}, {"nu", 1.0}}}}},
          {"solver", {{"restarts", 4}, {"seed", 1}}},
          {"sweep", {{"g", {0.0, 10.0, 40.0}}, {"omega_z", {0.0, 0.7, 1.3}}, {"dm_ranks", {2, 4}}}}};
}

struct SweepOutcome {
  Outcome vortices;
  Outcome dm;
};

SweepOutcome symmetry_breaking_sweep() {
  SweepOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = scratch("sweep");
  const int code = run_sweep(sweep_config(), dir, 1);
  const double t = seconds_since(t0);
  out.vortices.require(code == 0, fmt("sweep exit code %d", code));
  out.dm.require(code == 0, fmt("sweep exit code %d", code));
  if (code != 0) return out;

  const json doc = json::parse(slurp(dir / "sweep.json"));
  const json* found = nullptr;
  double worst_gap = -1e300, worst_order = -1e300;
  for (const json& p : doc.at("points")) {
    const auto& vort = p.at("vortex_report").at("vortices");
    const auto plus = std::count_if(vort.begin(), vort.end(), [](const json& v) { return v.at("winding") == 1; });
    const bool broken = plus >= 2 && p.at("s_metric").get<double>() > tol::sweep_s_metric &&
                        p.at("n_minimizers").get<int>() >= 2;
    if (broken && !found) found = &p;
    const double egp = p.at("energy").get<double>();
    const auto& dm = p.at("dm");
    for (std::size_t k = 0; k < dm.size(); ++k) {
      worst_gap = std::max(worst_gap, dm[k].at("energy").get<double>() - egp);
      if (k > 0) worst_order = std::max(worst_order, dm[k].at("energy").get<double>() - dm[k - 1].at("energy").get<double>());
    }
  }
  out.vortices.require(found != nullptr, "no point with >= 2 vortices, s > 1e-2 and >= 2 clusters");
  out.vortices.require(t < tol::sweep_seconds, "runtime");
  if (found) {
    const auto& vort = found->at("vortex_report").at("vortices");
    out.vortices.note(fmt("g = %g, Omega = %g: %zu vortices, s = %.3f, %d clusters", found->at("g").get<double>(),
                          found->at("omega_z").get<double>(), vort.size(), found->at("s_metric").get<double>(),
                          found->at("n_minimizers").get<int>()));
  }
  out.vortices.note(fmt("%zu points, %.0f s", doc.at("points").size(), t));

  out.dm.require(worst_gap <= tol::dm_order, "E_DM > E_GP somewhere");
  out.dm.require(worst_order <= tol::dm_order, "E_DM4 > E_DM2 somewhere");
  if (found) {
    const json& dm4 = found->at("dm").back();
    const double gap = dm4.at("energy").get<double>() - found->at("energy").get<double>();
    const auto& w = dm4.at("weights");
    const auto support = std::count_if(w.begin(), w.end(), [](const json& x) { return x.get<double>() > tol::dm_weight; });
    out.dm.require(dm4.at("rank") == 4, "rank 4 at the broken point");
    out.dm.require(gap < -tol::dm_gap, "E_DM4 - E_GP");
    out.dm.require(support >= 2, "weights above 1e-3");
    out.dm.note(fmt("E_DM4 - E_GP = %.6f with %zu weights > 1e-3", gap, static_cast<std::size_t>(support)));
  } else {
    out.dm.require(false, "no broken point from the sweep");
  }
  out.dm.note(fmt("max E_DM - E_GP = %.1e, max E_DM4 - E_DM2 = %.1e", worst_gap, worst_order));
  return out;
}

Outcome gp_limit() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec = harmonic2d(8.0, 64, 0.0, 0.0);
  for (double g : {0.5, 2.0}) {
    const auto rows = gp_limit_scan(spec, 4, g, {2, 4, 6, 8});
    std::string gaps;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double d = std::abs(rows[i].e0_over_n - rows[i].e_gp_truncated);
      gaps += fmt(" %.2e", d);
      if (i > 0) {
        const double prev = std::abs(rows[i - 1].e0_over_n - rows[i - 1].e_gp_truncated);
        o.require(d <= prev, fmt("trend at g = %g, N = %d", g, rows[i].n));
      }
    }
    o.note(fmt("g = %g gaps", g) + gaps);
  }
  const auto small = gp_limit_scan(spec, 4, 0.1, {8});
  o.require(small[0].condensate_fraction >= tol::condensate, "condensate fraction");
  o.note(fmt("fraction %.5f at g = 0.1, N = 8", small[0].condensate_fraction));

  const auto modes = lowest_eigenpairs(spec, 1);
  double worst = 0.0;
  for (int n = 2; n <= 10; ++n) {
    const FockProblem p = make_problem(modes, n, PairPotential::contact(0.3));
    const double closed = n * p.energies[0] + 0.5 * n * (n - 1) * p.W(0, 0, 0, 0).real();
    worst = std::max(worst, std::abs(ground_state_bosonic(p).e0 - closed));
  }
  o.require(worst <= tol::fock_closed_form, "M = 1 closed form");
  const double t = seconds_since(t0);
  o.require(t < tol::fock_seconds, "runtime");
  o.note(fmt("M = 1 deviation %.1e, %.1f s", worst, t));
  return o;
}

Outcome absolute_vs_bosonic() {
  Outcome o;
  std::string eq_detail, bound_detail;
  double worst_bound = -1e300;
  for (double w : {0.0, 0.5, 1.0})
    for (double g : {0.1, 0.5, 2.0, 10.0}) {
      const ModelSpec spec = harmonic2d(8.0, 64, w, 0.0);
      const auto row = gp_limit_scan(spec, 3, g, {3}, true)[0];
      const double e0 = 3.0 * row.e0_over_n, eabs = *row.e_abs;
      worst_bound = std::max(worst_bound, eabs - e0);
      o.require(eabs <= e0 + tol::abs_equal, fmt("E_abs <= E0 at Omega = %g, g = %g", w, g));
      if (w == 0.0) {
        o.require(std::abs(eabs - e0) < tol::abs_equal, fmt("E_abs = E0 at g = %g", g));
        eq_detail += fmt(" g=%g: %.4f/%.4f", g, eabs, e0);
      }
    }
  o.note("Omega = 0 E_abs/E0" + eq_detail);
  o.note(fmt("max E_abs - E0 = %.1e", worst_bound));
  return o;
}

Outcome coherent_identities() {
  Outcome o;
  const cplx z(1.0, 1.0);
  const CoherentReport r = coherent_state_checks(64, z, 8.0, 8, 128, 256);
  const CoherentReport fine = coherent_state_checks(64, z, 8.0, 8, 256, 256);
  o.require(std::abs(r.mean_a - z) < tol::coherent_moment, "<a>");
  o.require(std::abs(r.mean_number - 2.0) < tol::coherent_moment, "<a+a>");
  o.require(r.completeness_error < tol::coherent_quadrature, "completeness");
  o.require(fine.completeness_error < r.completeness_error, "completeness under refinement");
  o.require(r.upper_symbol_error < tol::coherent_quadrature, "upper symbol");
  o.require(fine.upper_symbol_error < r.upper_symbol_error, "upper symbol under refinement");
  o.note(fmt("|<a> - z| = %.1e, completeness %.2e -> %.2e, upper symbol %.2e -> %.2e", std::abs(r.mean_a - z),
             r.completeness_error, fine.completeness_error, r.upper_symbol_error, fine.upper_symbol_error));
  return o;
}

Outcome scattering() {
  Outcome o;
  const double hs = scattering_length(RadialPotential::hard_sphere(0.7));
  o.require(std::abs(hs - 0.7) <= tol::hard_sphere, "hard sphere");

  double worst = 0.0;
  for (const RadialPotential& w : {RadialPotential::hard_sphere(1.0), RadialPotential::square_well(2.0, 1.0),
                                   RadialPotential::gaussian(3.0, 1.0), RadialPotential::soft_shell(0.5, 1.0, 0.7)}) {
    const double a1 = scattering_length(w);
    for (double a : {0.3, 2.5}) {
      const double rel = std::abs(scattering_length(scale_potential(w, a)) - a * a1) / std::abs(a * a1);
      worst = std::max(worst, rel);
      o.require(rel <= tol::scaling_rel, "scaling of " + w.name());
    }
  }

  const RadialPotential shell = RadialPotential::soft_shell(0.5, 1.0);
  const double integral = volume_integral(shell);
  o.require(std::abs(integral - 4 * pi) <= tol::shell_integral, "shell integral");
  const auto rows = born_check(shell, {0.1, 0.05, 0.025, 0.0125});
  std::string ratios;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ratio = rows[i].rel_deviation / rows[i - 1].rel_deviation;
    ratios += fmt(" %.3f", ratio);
    o.require(ratio <= tol::born_ratio, fmt("first-order ratio at a = %g", rows[i].a));
  }
  o.note(fmt("hard sphere %.10f, worst scaling error %.1e, ratios", hs, worst) + ratios);
  return o;
}

Outcome vortex_detector() {
  Outcome o;
  const Grid g = Grid::cube(2, 8.0, 64);
  const VortexReport one = detect_vortices(winding_field(g, 1));
  o.require(one.vortices.size() == 1 && one.vortices[0].winding == 1 && std::hypot(one.vortices[0].x, one.vortices[0].y) < g.spacing(0),
            "single +1 vortex at the origin");
  o.require(std::abs(one.lz_expectation - 1.0) < tol::lz, "Lz of the +1 state");
  const VortexReport flat = detect_vortices(oscillator_ground(g));
  o.require(flat.vortices.empty() && std::abs(flat.lz_expectation) < tol::lz, "Gaussian");
  const VortexReport two = detect_vortices(winding_field(g, -2));
  o.require(two.total_winding == -2 && std::abs(two.lz_expectation + 2.0) < tol::lz, "charge -2");

  // 50 random fields: gauge and quarter-turn covariance of the vortex set.
  const Grid small = Grid::cube(2, 6.0, 32);
  std::size_t total = 0;
  for (unsigned s = 0; s < 50; ++s) {
    const Field f = random_field(small, 900 + s, 0.15);
    const VortexReport base = detect_vortices(f);
    total += base.vortices.size();
    const VortexReport gauge = detect_vortices(std::polar(1.0, 0.1 + 0.1 * s) * f);
    bool same = gauge.vortices.size() == base.vortices.size();
    for (std::size_t i = 0; same && i < base.vortices.size(); ++i)
      same = gauge.vortices[i].x == base.vortices[i].x && gauge.vortices[i].y == base.vortices[i].y &&
             gauge.vortices[i].winding == base.vortices[i].winding;
    o.require(same, fmt("gauge, field %u", s));

    // result(x, y) = f(y, -x): a vortex at (a, b) moves to (-b, a), modulo the period.
    const double period = 2.0 * small.half_width(0);
    const VortexReport turned = detect_vortices(rotate_quarter_turn(f));
    bool mapped = turned.vortices.size() == base.vortices.size() && turned.total_winding == base.total_winding;
    for (const Vortex& v : base.vortices) {
      const bool hit = std::any_of(turned.vortices.begin(), turned.vortices.end(), [&](const Vortex& t) {
        return t.winding == v.winding && std::hypot(std::remainder(t.x + v.y, period), std::remainder(t.y - v.x, period)) <=
                                              small.spacing(0);
      });
      mapped = mapped && hit;
    }
    o.require(mapped, fmt("quarter turn, field %u", s));
  }
  o.note(fmt("synthetic cases ok; %zu vortices across 50 random fields", total));
  return o;
}

Outcome determinism() {
  Outcome o;
  const json cfg{{"model", {{"dim", 2}, {"half_width", 6.0}, {"points", 32}}},
                 {"solver", {{"restarts", 2}, {"seed", 77}}},
                 {"sweep", {{"g", {0.0, 5.0}}, {"omega_z", {0.0, 0.9}}, {"dm_ranks", {2}}}}};
  const fs::path a = scratch("determinism_a"), b = scratch("determinism_b");
  const int ca = run_sweep(cfg, a, 1), cb = run_sweep(cfg, b, 2);
  o.require(ca == 0 && cb == 0, "sweep exit codes");
  for (const char* f : {"sweep.csv", "sweep.json"}) {
    const std::string x = slurp(a / f), y = slurp(b / f);
    o.require(!x.empty() && x == y, std::string(f) + " differs");
  }
  o.note("sweep.csv and sweep.json identical across two runs (1 and 2 workers)");
  return o;
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int n, const char* title, const Outcome& o) {
    all = all && o.pass;
    std::printf("criterion %2d %s  %s: %s\n", n, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
    std::fflush(stdout);
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      Outcome o;
      o.require(false, e.what());
      return o;
    }
  };

  report(1, "3D oscillator energy", guarded(oscillator_pin));
  report(2, "rotating linear oscillator", guarded(rotating_linear_pin));
  report(3, "gradient against finite differences", guarded(gradient_check));
  report(4, "unique minimizer without rotation", guarded(uniqueness));
  SweepOutcome sw;
  try {
    sw = symmetry_breaking_sweep();
  } catch (const std::exception& e) {
    sw.vortices.require(false, e.what());
    sw.dm.require(false, e.what());
  }
  report(5, "symmetry breaking and vortices", sw.vortices);
  report(6, "density matrix below GP", sw.dm);
  report(7, "many-body approach to the GP limit", guarded(gp_limit));
  report(8, "absolute versus bosonic ground state", guarded(absolute_vs_bosonic));
  report(9, "coherent-state identities", guarded(coherent_identities));
  report(10, "scattering lengths", guarded(scattering));
  report(11, "vortex detector", guarded(vortex_detector));
  report(12, "sweep determinism", guarded(determinism));
  fs::remove_all(fs::temp_directory_path() / "rotbec_acceptance");
  return all ? 0 : 1;
}
