#pragma once

/** @file experiments.hpp
    @brief Experiment drivers: k convergence, TOL sweeps over the sweep
    coefficient sequence, single solves and two-phase upscaling runs. Each
    returns its numbers and, given an output directory, writes the CSV and
    field artifacts.
*/

#include "lodadapt/config.hpp"
#include "lodadapt/darcy.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lodadapt {

/// Errors of an LOD solution against the fine reference u_h:
/// energy = |u_h − û|_A / |u_h + g|_A, l2_coarse = ‖I_H u_h − α‖_{L2}.
struct SolutionErrors {
  double energy = 0.0;
  double l2_coarse = 0.0;
};

SolutionErrors solution_errors(const MeshPair& mesh, const Coefficient& a, const FineFunction& uh,
                               const FineFunction& g, const FineFunction& u, const CoarseFunction& alpha);

struct KconvRow {
  int k = 0;
  SolutionErrors err;
  double wall_ms = 0.0;
};

struct KconvResult {
  std::vector<KconvRow> rows;
  std::optional<SolutionErrors> coarse_fem;
};

KconvResult run_kconv(const RunConfig& cfg, const std::filesystem::path* out = nullptr);

struct SweepStep {
  int n = 0;
  int count = 0;
  double fraction = 0.0;
  SolutionErrors err;      ///< NaN without a reference
  double full_diff = 0.0;  ///< |û − û_full|_A / |û_full + g|_A, NaN without a full run
  double wall_ms = 0.0;
  std::vector<char> recomputed;
};

struct SweepRun {
  double tol = 0.0;
  bool full = false; ///< always-recompute run
  std::vector<SweepStep> steps;

  double max_energy() const;
  double mean_fraction() const;
};

std::vector<SweepRun> run_tol_sweep(const RunConfig& cfg, const std::filesystem::path* out = nullptr);

struct SingleResult {
  CoarseFunction alpha;
  std::optional<SolutionErrors> err;
};

SingleResult run_single(const RunConfig& cfg, const std::filesystem::path* out = nullptr);

struct DarcyStepStats {
  int n = 0;
  int count = 0;
  double fraction = 0.0;
  double wall_ms = 0.0;
  double sat_min = 0.0;
  double sat_max = 0.0;
  double conservation = 0.0;  ///< max_T |residual_T| / mean_F |σ_F|
  double balance = 0.0;       ///< |Σ_{Γ_D} θσ − ∫f| / Σ_{Γ_D} |σ|
  double mass = 0.0;          ///< |mass change − boundary term| / transport scale
  double delta_mismatch = 0.0; ///< max |δ_fine − δ_coarse| / max(1, |δ|)
  double sat_error = 0.0;     ///< ‖s − s_ref‖_{L2}, NaN without a reference
};

struct DarcyVariant {
  std::string name; ///< fine_reference, coarse_fem or lod_k<k>_tol<TOL>
  int k = -1;
  double tol = 0.0;
  std::vector<DarcyStepStats> steps;
  std::vector<Saturation> saturation; ///< s⁰ .. s^N
  int range_violations = 0;

  double mean_fraction() const;
};

struct DarcyResult {
  std::vector<DarcyVariant> variants;
  const DarcyVariant* find(const std::string& name) const;
};

/// Initial saturation of the run (zero, or 1 inside |x − ½| ≤ ¼ at coarse
/// cell midpoints).
Saturation initial_saturation(const MeshPair& mesh, const std::string& kind);

DarcyResult run_darcy(const RunConfig& cfg, const std::filesystem::path* out = nullptr);

std::string lod_variant_name(int k, double tol);

/// Runs the configured experiment and writes metadata.json and artifacts.
void run_experiment(const RunConfig& cfg, const std::filesystem::path& out);

} // namespace lodadapt
