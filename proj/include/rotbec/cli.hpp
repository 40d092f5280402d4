#pragma once

// Batch front end: JSON run configuration, subcommands and result files.
//
//   rotbec <gp-min|dm-min|sweep|fock|coherent|scatter> --config run.json
//          [--workers n] [--verbose]
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 no convergence, 4 unstable trap.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rotbec/manybody.hpp"
#include "rotbec/model.hpp"
#include "rotbec/scatter.hpp"

namespace rotbec::cli {

struct ModelConfig {
  int dim = 2;
  std::vector<double> half_width{8.0};
  std::vector<int> points{64};
  Trap trap = Trap::harmonic({1.0});
  RotationSpec rotation;
  double g = 0.0;

  ModelSpec build() const;
  Grid grid() const;
};

struct SolverConfig {
  double tol = 1e-8;
  std::size_t max_iter = 200000;
  int restarts = 4;
  std::uint64_t seed = 1;
};

/// Cartesian product of the g and omega_z lists; a missing list means the
/// model value.
struct SweepConfig {
  std::vector<double> g;
  std::vector<double> omega_z;
  std::vector<int> dm_ranks{2, 4};
};

struct OutputConfig {
  std::filesystem::path directory = "rotbec-out";
  bool emit_fields = false;
  bool emit_images = false;
};

struct DMConfig {
  int rank = 4;
  double tol = 1e-8;
  std::size_t max_iter = 200000;
};

struct FockConfig {
  int modes = 4;
  std::vector<double> g{0.5, 2.0};
  std::vector<int> particles{2, 4, 6, 8};
  bool absolute = false;
  PairPotential::Kind potential = PairPotential::Kind::contact;
};

struct CoherentConfig {
  int dimension = 64;
  cplx z{1.0, 1.0};
  double radius = 8.0;
  int n_max = 8;
  int radial = 128;
  int angular = 256;
};

struct ScatterConfig {
  double shell_inner = 0.5;
  double shell_outer = 1.0;
  std::vector<double> a{0.1, 0.05, 0.025, 0.0125};
  std::vector<RadialPotential> potentials;
};

struct RunConfig {
  ModelConfig model;
  SolverConfig solver;
  std::optional<SweepConfig> sweep;
  OutputConfig outputs;
  DMConfig dm;
  FockConfig fock;
  CoherentConfig coherent;
  ScatterConfig scatter;
  /// FNV-1a of the canonical JSON text, outputs section left out.
  std::uint64_t hash = 0;
};

/// Throws ConfigError on malformed JSON, unknown keys or bad values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view bytes);

/// Whole command line, program name first. Returns the exit code.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace rotbec::cli
