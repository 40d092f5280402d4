#include "rotbec/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rotbec/diagnostics.hpp"
#include "rotbec/dm.hpp"
#include "rotbec/errors.hpp"
#include "rotbec/field_io.hpp"
#include "rotbec/gp.hpp"

namespace rotbec::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- parsing

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

template <class T>
std::vector<T> list_or_scalar(const json& v, int dim, const std::string& what) {
  if (v.is_array()) {
    auto out = v.get<std::vector<T>>();
    if (static_cast<int>(out.size()) != dim)
      throw ConfigError(what + ": expected " + std::to_string(dim) + " entries");
    return out;
  }
  return std::vector<T>(static_cast<std::size_t>(dim), v.get<T>());
}

Trap parse_trap(const json& j, int dim, std::size_t grid_size) {
  only_keys(j, "model.trap", {"kind", "nu", "lambda", "values"});
  const std::string kind = get_or<std::string>(j, "kind", "harmonic");
  std::vector<double> nu(static_cast<std::size_t>(dim), 1.0);
  if (j.contains("nu")) nu = list_or_scalar<double>(j.at("nu"), dim, "model.trap.nu");
  if (kind == "harmonic") return Trap::harmonic(nu);
  if (kind == "quartic") {
    if (!j.contains("lambda")) throw ConfigError("model.trap: quartic trap needs lambda");
    return Trap::quartic(nu, j.at("lambda").get<double>());
  }
  if (kind == "sampled") {
    if (!j.contains("values")) throw ConfigError("model.trap: sampled trap needs values");
    auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != grid_size)
      throw ConfigError("model.trap: sampled values must have one entry per grid point");
    return Trap::sampled(std::move(values));
  }
  throw ConfigError("model.trap: unknown kind '" + kind + "'");
}

ModelConfig parse_model(const json& j) {
  only_keys(j, "model", {"dim", "half_width", "points", "trap", "omega", "omega_z", "g"});
  ModelConfig m;
  m.dim = get_or<int>(j, "dim", 2);
  if (m.dim != 2 && m.dim != 3) throw ConfigError("model.dim must be 2 or 3");
  m.half_width = list_or_scalar<double>(j.value("half_width", json(8.0)), m.dim, "model.half_width");
  m.points = list_or_scalar<int>(j.value("points", json(64)), m.dim, "model.points");
  for (double L : m.half_width)
    if (!(L > 0.0)) throw ConfigError("model.half_width must be positive");
  for (int n : m.points)
    if (n < 8 || n % 2 != 0) throw ConfigError("model.points must be even and >= 8");
  std::size_t size = 1;
  for (int n : m.points) size *= static_cast<std::size_t>(n);
  m.trap = parse_trap(j.value("trap", json::object()), m.dim, size);
  if (j.contains("omega") && j.contains("omega_z"))
    throw ConfigError("model: give either omega or omega_z");
  if (j.contains("omega")) {
    const auto w = j.at("omega").get<std::vector<double>>();
    if (w.size() != 3) throw ConfigError("model.omega must have three components");
    m.rotation.omega = {w[0], w[1], w[2]};
    if (m.dim == 2 && (w[0] != 0.0 || w[1] != 0.0))
      throw ConfigError("model.omega: only the z component may be nonzero in 2D");
  } else {
    m.rotation = RotationSpec::about_z(get_or<double>(j, "omega_z", 0.0));
  }
  m.g = get_or<double>(j, "g", 0.0);
  if (!(m.g >= 0.0)) throw ConfigError("model.g must be nonnegative");
  return m;
}

SolverConfig parse_solver(const json& j) {
  only_keys(j, "solver", {"tol", "max_iter", "restarts", "seed"});
  SolverConfig s;
  s.tol = get_or<double>(j, "tol", s.tol);
  s.max_iter = get_or<std::size_t>(j, "max_iter", s.max_iter);
  s.restarts = get_or<int>(j, "restarts", s.restarts);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  if (!(s.tol > 0.0) || s.max_iter == 0 || s.restarts < 0)
    throw ConfigError("solver: tol and max_iter must be positive, restarts >= 0");
  return s;
}

SweepConfig parse_sweep(const json& j) {
  only_keys(j, "sweep", {"g", "omega_z", "parameter", "values", "dm_ranks"});
  SweepConfig s;
  if (j.contains("parameter")) {
    if (j.contains("g") || j.contains("omega_z"))
      throw ConfigError("sweep: give either parameter/values or g/omega_z lists");
    const auto p = j.at("parameter").get<std::string>();
    auto values = j.at("values").get<std::vector<double>>();
    if (p == "g")
      s.g = std::move(values);
    else if (p == "omega_z")
      s.omega_z = std::move(values);
    else
      throw ConfigError("sweep.parameter must be g or omega_z");
  } else {
    if (j.contains("values")) throw ConfigError("sweep: values needs parameter");
    s.g = get_or<std::vector<double>>(j, "g", {});
    s.omega_z = get_or<std::vector<double>>(j, "omega_z", {});
  }
  s.dm_ranks = get_or<std::vector<int>>(j, "dm_ranks", s.dm_ranks);
  std::sort(s.dm_ranks.begin(), s.dm_ranks.end());
  for (int r : s.dm_ranks)
    if (r < 1 || r > 8) throw ConfigError("sweep.dm_ranks entries must lie in 1..8");
  for (double g : s.g)
    if (!(g >= 0.0)) throw ConfigError("sweep.g values must be nonnegative");
  return s;
}

OutputConfig parse_outputs(const json& j) {
  only_keys(j, "outputs", {"directory", "emit_fields", "emit_images"});
  OutputConfig o;
  o.directory = get_or<std::string>(j, "directory", o.directory.string());
  o.emit_fields = get_or<bool>(j, "emit_fields", false);
  o.emit_images = get_or<bool>(j, "emit_images", false);
  return o;
}

DMConfig parse_dm(const json& j) {
  only_keys(j, "dm", {"rank", "tol", "max_iter"});
  DMConfig d;
  d.rank = get_or<int>(j, "rank", d.rank);
  d.tol = get_or<double>(j, "tol", d.tol);
  d.max_iter = get_or<std::size_t>(j, "max_iter", d.max_iter);
  if (d.rank < 1 || d.rank > 8) throw ConfigError("dm.rank must lie in 1..8");
  return d;
}

FockConfig parse_fock(const json& j) {
  only_keys(j, "fock", {"modes", "g", "particles", "absolute", "potential"});
  FockConfig f;
  f.modes = get_or<int>(j, "modes", f.modes);
  f.g = get_or<std::vector<double>>(j, "g", f.g);
  f.particles = get_or<std::vector<int>>(j, "particles", f.particles);
  f.absolute = get_or<bool>(j, "absolute", f.absolute);
  const auto kind = get_or<std::string>(j, "potential", "contact");
  if (kind == "contact")
    f.potential = PairPotential::Kind::contact;
  else if (kind == "gaussian")
    f.potential = PairPotential::Kind::gaussian;
  else
    throw ConfigError("fock.potential must be contact or gaussian");
  if (f.modes < 1 || f.modes > 6) throw ConfigError("fock.modes must lie in 1..6");
  for (int n : f.particles)
    if (n < 1 || n > 10) throw ConfigError("fock.particles entries must lie in 1..10");
  return f;
}

CoherentConfig parse_coherent(const json& j) {
  only_keys(j, "coherent", {"dimension", "z", "radius", "n_max", "radial", "angular"});
  CoherentConfig c;
  c.dimension = get_or<int>(j, "dimension", c.dimension);
  if (j.contains("z")) {
    const auto z = j.at("z").get<std::vector<double>>();
    if (z.size() != 2) throw ConfigError("coherent.z is [re, im]");
    c.z = {z[0], z[1]};
  }
  c.radius = get_or<double>(j, "radius", c.radius);
  c.n_max = get_or<int>(j, "n_max", c.n_max);
  c.radial = get_or<int>(j, "radial", c.radial);
  c.angular = get_or<int>(j, "angular", c.angular);
  if (c.dimension < 1 || c.n_max < 0 || c.n_max >= c.dimension || c.radial < 1 || c.angular < 1 ||
      !(c.radius > 0.0))
    throw ConfigError("coherent: need dimension > n_max >= 0, positive radius and quadrature sizes");
  return c;
}

RadialPotential parse_potential(const json& j) {
  only_keys(j, "scatter.potentials[]",
            {"kind", "radius", "height", "amplitude", "width", "inner", "outer", "multiplier"});
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "hard_sphere") return RadialPotential::hard_sphere(j.at("radius").get<double>());
  if (kind == "square_well")
    return RadialPotential::square_well(j.at("height").get<double>(), j.at("radius").get<double>());
  if (kind == "gaussian")
    return RadialPotential::gaussian(j.at("amplitude").get<double>(), j.at("width").get<double>());
  if (kind == "soft_shell")
    return RadialPotential::soft_shell(j.at("inner").get<double>(), j.at("outer").get<double>(),
                                       get_or<double>(j, "multiplier", 1.0));
  throw ConfigError("scatter.potentials: unknown kind '" + kind + "'");
}

ScatterConfig parse_scatter(const json& j) {
  only_keys(j, "scatter", {"shell", "a", "potentials"});
  ScatterConfig s;
  if (j.contains("shell")) {
    const json& sh = j.at("shell");
    only_keys(sh, "scatter.shell", {"inner", "outer"});
    s.shell_inner = get_or<double>(sh, "inner", s.shell_inner);
    s.shell_outer = get_or<double>(sh, "outer", s.shell_outer);
  }
  s.a = get_or<std::vector<double>>(j, "a", s.a);
  for (double a : s.a)
    if (!(a >= 0.0)) throw ConfigError("scatter.a values must be nonnegative");
  if (j.contains("potentials"))
    for (const auto& p : j.at("potentials")) s.potentials.push_back(parse_potential(p));
  return s;
}

// ---------------------------------------------------------------- output

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Rounded to 12 significant digits so repeated runs compare byte for byte.
json r12(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(num(v).c_str(), nullptr);
}

std::string hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class Emitter {
 public:
  explicit Emitter(const RunConfig& cfg) : dir_(cfg.outputs.directory), hash_(hex(cfg.hash)), seed_(cfg.solver.seed) {
    fs::create_directories(dir_);
  }

  std::string stamp() const { return "rotbec config_hash=" + hash_ + " seed=" + std::to_string(seed_); }

  json document() const { return json{{"config_hash", hash_}, {"seed", seed_}}; }

  void write_json(const std::string& name, const json& doc) const {
    write_file_atomic(dir_ / name, doc.dump(2) + "\n");
  }

  void write_csv(const std::string& name, const std::vector<std::string>& columns,
                 const std::vector<std::vector<std::string>>& rows) const {
    std::string out = "# " + stamp() + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    };
    line(columns);
    for (const auto& r : rows) line(r);
    write_file_atomic(dir_ / name, out);
  }

  void write_field(const std::string& stem, const Field& phi) const {
    const Metadata meta{{"config_hash", hash_}, {"seed", std::to_string(seed_)}};
    write_field_csv(dir_ / (stem + ".csv"), phi, meta);
    write_field_binary(dir_ / (stem + ".bin"), phi, meta);
  }

  void write_images(const std::string& stem, const Field& phi) const {
    write_density_image(dir_ / (stem + "_density.pgm"), phi, stamp());
    write_phase_image(dir_ / (stem + "_phase.pgm"), phi, stamp());
  }

 private:
  fs::path dir_;
  std::string hash_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------- commands

struct Context {
  RunConfig cfg;
  int workers = 1;
  bool verbose = false;
  std::mutex log_mutex;

  void log(const std::string& msg) {
    if (!verbose) return;
    std::lock_guard lock(log_mutex);
    std::cerr << "rotbec: " << msg << "\n";
  }
};

GPOptions gp_options(const SolverConfig& s) {
  GPOptions o;
  o.tol = s.tol;
  o.max_iter = s.max_iter;
  o.restarts = s.restarts;
  o.seed = s.seed;
  return o;
}

std::optional<double> symmetry_metric(const ModelSpec& spec, const Field& phi) {
  try {
    return symmetry_breaking_metric(phi, spec);
  } catch (const NotAxisymmetricTrap&) {
    return std::nullopt;
  }
}

json breakdown_json(const GPBreakdown& b) {
  return {{"kinetic", r12(b.kinetic)},
          {"potential", r12(b.potential)},
          {"rotational", r12(b.rotational)},
          {"interaction", r12(b.interaction)},
          {"total", r12(b.total)}};
}

json vortex_json(const VortexReport& v) {
  json list = json::array();
  for (const auto& x : v.vortices) list.push_back({{"x", r12(x.x)}, {"y", r12(x.y)}, {"winding", x.winding}});
  return {{"vortices", list},
          {"total_winding", v.total_winding},
          {"Lz", r12(v.lz_expectation)},
          {"density_floor", r12(v.density_floor_used)}};
}

int gp_min(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelSpec spec = cfg.model.build();
  require_stable(spec);
  Emitter out(cfg);
  ctx.log("gp-min: " + std::to_string(cfg.solver.restarts) + " noise restarts + vortex seeds");
  const auto runs = minimize_gp_runs(spec, gp_options(cfg.solver));
  const GPResult best = best_run(runs);
  const VortexReport vort = detect_vortices(best.phi);
  const auto s = symmetry_metric(spec, best.phi);
  const SymmetryReport family = minimizer_family_analysis(spec, runs);

  json doc = out.document();
  doc["energy"] = r12(best.energy);
  doc["mu"] = r12(best.mu);
  doc["breakdown"] = breakdown_json(best.breakdown);
  doc["residual"] = r12(best.residual);
  doc["iterations"] = best.iterations;
  doc["restarts_used"] = best.restarts_used;
  doc["origin"] = best.origin;
  doc["vortex_report"] = vortex_json(vort);
  doc["s_metric"] = s ? r12(*s) : json(nullptr);
  doc["n_minimizers"] = family.n_distinct_minimizers;
  json list = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i)
    list.push_back({{"origin", runs[i].origin},
                    {"energy", r12(runs[i].energy)},
                    {"residual", r12(runs[i].residual)},
                    {"converged", runs[i].converged},
                    {"cluster", family.cluster_of[i]}});
  doc["runs"] = list;
  out.write_json("gp.json", doc);
  if (cfg.outputs.emit_fields) out.write_field("gp_phi", best.phi);
  if (cfg.outputs.emit_images) out.write_images("gp", best.phi);
  ctx.log("gp-min: E = " + num(best.energy));
  return 0;
}

DMOptions dm_options(const RunConfig& cfg) {
  DMOptions o;
  o.tol = cfg.dm.tol;
  o.max_iter = cfg.dm.max_iter;
  o.gp = gp_options(cfg.solver);
  return o;
}

json dm_json(const DMResult& r) {
  json w = json::array(), h = json::array();
  for (double x : r.state.weights) w.push_back(r12(x));
  for (double x : r.orbital_h0) h.push_back(r12(x));
  return {{"energy", r12(r.energy)}, {"mu", r12(r.mu)},
          {"residual", r12(r.residual)}, {"iterations", r.iterations},
          {"alternations", r.alternations}, {"weights", w},
          {"orbital_h0", h}};
}

int dm_min(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelSpec spec = cfg.model.build();
  require_stable(spec);
  Emitter out(cfg);
  const GPResult gp = minimize_gp(spec, gp_options(cfg.solver));
  ctx.log("dm-min: GP start E = " + num(gp.energy));
  const DMResult dm = minimize_dm(spec, cfg.dm.rank, dm_options(cfg), DMState{{gp.phi}, {1.0}});
  json doc = out.document();
  doc["rank"] = cfg.dm.rank;
  doc.update(dm_json(dm));
  doc["gp_energy"] = r12(gp.energy);
  doc["dm_gap"] = r12(dm.energy - gp.energy);
  out.write_json("dm.json", doc);
  if (cfg.outputs.emit_fields)
    for (std::size_t i = 0; i < dm.state.rank(); ++i)
      out.write_field("dm_orbital" + std::to_string(i), dm.state.orbitals[i]);
  ctx.log("dm-min: E = " + num(dm.energy));
  return 0;
}

struct SweepPoint {
  double g = 0.0;
  double omega_z = 0.0;
  std::uint64_t seed = 0;
  std::optional<GPResult> gp;
  VortexReport vortices;
  std::optional<double> s;
  std::size_t n_minimizers = 0;
  std::vector<DMResult> dm;
};

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  return seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index);
}

SweepPoint run_point(Context& ctx, const ModelSpec& spec, SweepPoint p) {
  const RunConfig& cfg = ctx.cfg;
  GPOptions o = gp_options(cfg.solver);
  o.seed = p.seed;
  const auto runs = minimize_gp_runs(spec, o);
  p.gp = best_run(runs);
  p.vortices = detect_vortices(p.gp->phi);
  p.s = symmetry_metric(spec, p.gp->phi);
  p.n_minimizers = minimizer_family_analysis(spec, runs).n_distinct_minimizers;
  DMOptions d = dm_options(cfg);
  d.gp = o;
  DMState start{{p.gp->phi}, {1.0}};
  for (int rank : cfg.sweep->dm_ranks) {
    p.dm.push_back(minimize_dm(spec, rank, d, start));
    start = p.dm.back().state;
  }
  ctx.log("sweep: g=" + num(p.g) + " omega_z=" + num(p.omega_z) + " E=" + num(p.gp->energy) +
          " vortices=" + std::to_string(p.vortices.vortices.size()));
  return p;
}

int sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (!cfg.sweep) throw ConfigError("sweep: configuration has no sweep section");
  if (cfg.model.rotation.omega[0] != 0.0 || cfg.model.rotation.omega[1] != 0.0)
    throw ConfigError("sweep: omega_z sweeps need rotation about the z axis");
  const ModelSpec base = cfg.model.build();
  const auto gs = cfg.sweep->g.empty() ? std::vector<double>{cfg.model.g} : cfg.sweep->g;
  const auto ws = cfg.sweep->omega_z.empty() ? std::vector<double>{cfg.model.rotation.omega[2]}
                                             : cfg.sweep->omega_z;
  std::vector<SweepPoint> points;
  std::vector<ModelSpec> specs;
  for (double g : gs)
    for (double w : ws) {
      ModelSpec spec = base.with_coupling(g).with_rotation(RotationSpec::about_z(w));
      require_stable(spec);
      SweepPoint p;
      p.g = g;
      p.omega_z = w;
      p.seed = point_seed(cfg.solver.seed, points.size());
      points.push_back(p);
      specs.push_back(std::move(spec));
    }
  Emitter out(cfg);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < points.size();) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        points[i] = run_point(ctx, specs[i], points[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int n = std::clamp(ctx.workers, 1, static_cast<int>(points.size()));
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> columns{"g", "omega_z", "seed", "energy", "mu", "residual",
                                   "n_vortices", "n_plus_one", "total_winding", "Lz",
                                   "s_metric", "n_minimizers"};
  for (int r : cfg.sweep->dm_ranks) columns.push_back("E_dm" + std::to_string(r));
  if (!cfg.sweep->dm_ranks.empty()) {
    columns.push_back("dm_gap");
    columns.push_back("dm_support");
  }
  std::vector<std::vector<std::string>> rows;
  json list = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SweepPoint& p = points[i];
    std::vector<std::string> row{num(p.g), num(p.omega_z), std::to_string(p.seed),
                                 num(p.gp->energy), num(p.gp->mu), num(p.gp->residual),
                                 std::to_string(p.vortices.vortices.size()),
                                 std::to_string(p.vortices.count(1)),
                                 std::to_string(p.vortices.total_winding),
                                 num(p.vortices.lz_expectation),
                                 p.s ? num(*p.s) : "nan", std::to_string(p.n_minimizers)};
    json entry{{"g", r12(p.g)}, {"omega_z", r12(p.omega_z)}, {"seed", p.seed},
               {"energy", r12(p.gp->energy)}, {"mu", r12(p.gp->mu)},
               {"residual", r12(p.gp->residual)}, {"origin", p.gp->origin},
               {"vortex_report", vortex_json(p.vortices)},
               {"s_metric", p.s ? r12(*p.s) : json(nullptr)},
               {"n_minimizers", p.n_minimizers}};
    json dms = json::array();
    for (std::size_t k = 0; k < p.dm.size(); ++k) {
      row.push_back(num(p.dm[k].energy));
      json d = dm_json(p.dm[k]);
      d["rank"] = cfg.sweep->dm_ranks[k];
      dms.push_back(d);
    }
    if (!p.dm.empty()) {
      const auto& top = p.dm.back();
      const auto support = std::count_if(top.state.weights.begin(), top.state.weights.end(),
                                         [](double w) { return w > 1e-3; });
      row.push_back(num(top.energy - p.gp->energy));
      row.push_back(std::to_string(support));
      entry["dm_gap"] = r12(top.energy - p.gp->energy);
    }
    entry["dm"] = dms;
    rows.push_back(std::move(row));
    list.push_back(std::move(entry));
    const std::string stem = "point" + std::to_string(i);
    if (cfg.outputs.emit_fields) out.write_field(stem + "_phi", p.gp->phi);
    if (cfg.outputs.emit_images) out.write_images(stem, p.gp->phi);
  }
  out.write_csv("sweep.csv", columns, rows);
  json doc = out.document();
  doc["points"] = list;
  out.write_json("sweep.json", doc);
  return 0;
}

int fock(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelSpec spec = cfg.model.build();
  require_stable(spec);
  Emitter out(cfg);
  json doc = out.document();
  doc["modes"] = cfg.fock.modes;
  json scans = json::array();
  for (double g : cfg.fock.g) {
    ctx.log("fock: g=" + num(g));
    const auto rows = gp_limit_scan(spec, cfg.fock.modes, g, cfg.fock.particles, cfg.fock.absolute,
                                     cfg.fock.potential);
    std::vector<std::vector<std::string>> table;
    json entries = json::array();
    for (const auto& r : rows) {
      table.push_back({std::to_string(r.n), num(r.a), num(r.e0_over_n), num(r.e_gp_truncated),
                       num(r.condensate_fraction), r.e_abs ? num(*r.e_abs) : ""});
      entries.push_back({{"N", r.n}, {"a", r12(r.a)}, {"E0_over_N", r12(r.e0_over_n)},
                         {"E_gp_truncated", r12(r.e_gp_truncated)},
                         {"condensate_fraction", r12(r.condensate_fraction)},
                         {"E_abs", r.e_abs ? r12(*r.e_abs) : json(nullptr)}});
    }
    out.write_csv("fock_g" + num(g) + ".csv",
                  {"N", "a", "E0_over_N", "E_gp_truncated", "condensate_fraction", "E_abs"}, table);
    scans.push_back({{"g", r12(g)}, {"rows", entries}});
  }
  doc["scans"] = scans;
  out.write_json("fock.json", doc);
  return 0;
}

json coherent_json(const CoherentReport& r) {
  return {{"mean_a", {r12(r.mean_a.real()), r12(r.mean_a.imag())}},
          {"mean_number", r12(r.mean_number)},
          {"norm", r12(r.norm)},
          {"completeness_error", r12(r.completeness_error)},
          {"upper_symbol_error", r12(r.upper_symbol_error)},
          {"weighted_error", r12(r.weighted_error)}};
}

int coherent(Context& ctx) {
  const CoherentConfig& c = ctx.cfg.coherent;
  Emitter out(ctx.cfg);
  const auto coarse = coherent_state_checks(c.dimension, c.z, c.radius, c.n_max, c.radial, c.angular);
  const auto fine =
      coherent_state_checks(c.dimension, c.z, c.radius, c.n_max, 2 * c.radial, 2 * c.angular);
  json doc = out.document();
  doc["dimension"] = c.dimension;
  doc["z"] = {r12(c.z.real()), r12(c.z.imag())};
  doc["radius"] = r12(c.radius);
  doc["n_max"] = c.n_max;
  doc["quadrature"] = {c.radial, c.angular};
  doc["report"] = coherent_json(coarse);
  doc["refined"] = coherent_json(fine);
  out.write_json("coherent.json", doc);
  return 0;
}

int scatter(Context& ctx) {
  const ScatterConfig& s = ctx.cfg.scatter;
  Emitter out(ctx.cfg);
  const auto shell = RadialPotential::soft_shell(s.shell_inner, s.shell_outer);
  const auto rows = born_check(shell, s.a);
  std::vector<std::vector<std::string>> table;
  json born = json::array();
  for (const auto& r : rows) {
    table.push_back({num(r.a), num(r.s_of_a), num(r.rel_deviation)});
    born.push_back({{"a", r12(r.a)}, {"s_of_a", r12(r.s_of_a)}, {"rel_deviation", r12(r.rel_deviation)}});
  }
  out.write_csv("born.csv", {"a", "s_of_a", "rel_deviation"}, table);
  json doc = out.document();
  doc["shell"] = {{"inner", r12(s.shell_inner)}, {"outer", r12(s.shell_outer)},
                  {"integral", r12(volume_integral(shell))}};
  doc["born"] = born;
  json lengths = json::array();
  for (const auto& v : s.potentials)
    lengths.push_back({{"kind", v.name()}, {"strength", r12(v.strength)},
                       {"radius", r12(v.radius)}, {"inner_radius", r12(v.inner_radius)},
                       {"scattering_length", r12(scattering_length(v))}});
  doc["potentials"] = lengths;
  out.write_json("scatter.json", doc);
  return 0;
}

int workers_from_env() {
  if (const char* env = std::getenv("ROTBEC_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("ROTBEC_WORKERS must be a positive integer");
  }
  return 1;
}

}  // namespace

ModelSpec ModelConfig::build() const { return ModelSpec(grid(), trap, rotation, g); }

Grid ModelConfig::grid() const { return Grid(dim, half_width, points); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_config(std::string_view text) {
  try {
    const json j = json::parse(text);
    only_keys(j, "config", {"model", "solver", "sweep", "outputs", "dm", "fock", "coherent", "scatter"});
    RunConfig c;
    c.model = parse_model(j.value("model", json::object()));
    c.solver = parse_solver(j.value("solver", json::object()));
    if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"));
    c.outputs = parse_outputs(j.value("outputs", json::object()));
    c.dm = parse_dm(j.value("dm", json::object()));
    c.fock = parse_fock(j.value("fock", json::object()));
    c.coherent = parse_coherent(j.value("coherent", json::object()));
    c.scatter = parse_scatter(j.value("scatter", json::object()));
    json hashed = j;
    hashed.erase("outputs");
    c.hash = fnv1a(hashed.dump());
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

int run(int argc, char** argv) {
  CLI::App app{"Ground states of rotating Bose gases"};
  std::string command;
  std::string config_path;
  std::optional<int> workers;
  bool verbose = false;
  const std::set<std::string> commands{"gp-min", "dm-min", "sweep", "fock", "coherent", "scatter"};
  app.add_option("command", command, "gp-min | dm-min | sweep | fock | coherent | scatter")
      ->required()
      ->check(CLI::IsMember(commands));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--workers", workers, "concurrent sweep points (default $ROTBEC_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "progress on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx;
    ctx.cfg = load_config(config_path);
    ctx.workers = workers ? *workers : workers_from_env();
    ctx.verbose = verbose;
    if (command == "gp-min") return gp_min(ctx);
    if (command == "dm-min") return dm_min(ctx);
    if (command == "sweep") return sweep(ctx);
    if (command == "fock") return fock(ctx);
    if (command == "coherent") return coherent(ctx);
    return scatter(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "rotbec: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NoConvergence& e) {
    std::cerr << "rotbec: " << e.what() << "\n";
    return 3;
  } catch (const Unstable& e) {
    std::cerr << "rotbec: unstable: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "rotbec: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace rotbec::cli
