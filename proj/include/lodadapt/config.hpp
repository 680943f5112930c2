#pragma once

/** @file config.hpp
    @brief Run configuration: JSON schema, presets and the coefficient
    generators they name.
*/

#include "lodadapt/adaptive.hpp"
#include "lodadapt/field.hpp"
#include "lodadapt/grid.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lodadapt {

enum class Experiment { kconv, tol_sweep, darcy2d, darcy3d, single_solve };
/// none: no reference solves. fine_fem: fine Q1 reference. coarse_fem: fine
/// reference plus the coarse Q1 method as a comparison.
enum class ReferenceMode { none, fine_fem, coarse_fem };

struct MeshConfig {
  int dim = 2;
  std::vector<int> coarse{16, 16};
  std::vector<int> refinement{8, 8};
  std::vector<int> dirichlet_axes{0};
};

struct FieldConfig {
  /// checkerboard, sweep, lognormal, product3d, constant, file
  std::string kind = "checkerboard";
  std::uint64_t seed = 1;
  double stddev = 3.0;
  double corr_len = 0.05;
  double value = 1.0;
  std::string path;
};

struct LodRun {
  int k = 2;
  double tol = 0.05;
};

struct DarcyConfig {
  int steps = 200;
  double dt = 0.005;
  std::string initial = "zero"; ///< zero or sphere
  /// Saturation on inflow faces, per box side [axis][lower, upper].
  std::vector<std::array<double, 2>> boundary_saturation{{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  bool clamp_saturation = false;
  /// Coefficient for the χ_T∇g part of the LOD pre-flux: "lagging" (stored
  /// with the tables) or "true" (current coefficient, recomputed every step).
  std::string g_flux = "lagging";
  std::vector<LodRun> runs{{2, 0.05}};
  int dump_every = 50;
  bool delta_check = true;
};

struct RunConfig {
  std::string name = "custom";
  Experiment experiment = Experiment::single_solve;
  MeshConfig mesh;
  FieldConfig field;
  int k = 2;
  std::vector<int> k_values{1, 2, 3, 4};
  std::vector<double> tol_values{0.5, 0.1, 0.05, 0.01};
  IndicatorMode indicator_mode = IndicatorMode::fine;
  bool include_rhs_correction = true;
  ReferenceMode reference = ReferenceMode::fine_fem;
  int steps = 128;                  ///< sweep steps n = 0..steps-1
  bool full_recompute_run = false;  ///< sweep: extra always-recompute run
  bool write_masks = true;
  bool write_indicators = true;
  bool squared_threshold = false;   ///< coarse mode: threshold E rather than √E
  /// Coefficient of the (A∇g, ∇φ_i)_T right-side term: "true" or "lagging".
  std::string boundary_load = "true";
  DarcyConfig darcy;
  int threads = 0; ///< 0: LODADAPT_THREADS or the hardware thread count
  std::string output_dir = "out";
  bool full_scale = false;
};

std::vector<std::string> preset_names(bool include_full = true);
/// Throws ConfigError for unknown names.
RunConfig preset(const std::string& name);

/// Overrides fields of `base` with the keys present in `j`; unknown keys and
/// invalid values throw ConfigError.
RunConfig parse_config(const nlohmann::json& j, RunConfig base = {});
nlohmann::json to_json(const RunConfig& cfg);
void validate(const RunConfig& cfg);

MeshPair make_mesh(const MeshConfig& m);
/// The configured coefficient; for "sweep" the sweep step n.
Coefficient make_field(const MeshPair& mesh, const FieldConfig& f, int n = 0);
/// g = 1 − x₁ at the fine nodes.
FineFunction boundary_function(const MeshPair& mesh);

int resolve_threads(int configured);

} // namespace lodadapt
