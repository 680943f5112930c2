#pragma once

/** @file adaptive.hpp
    @brief Adaptive recomputation of lagging correctors over a coefficient
    sequence: per-element store, indicator evaluation, thresholding, assembly
    and coarse solve.
*/

#include "lodadapt/corrector.hpp"
#include "lodadapt/darcy.hpp"
#include "lodadapt/indicator.hpp"
#include "lodadapt/pglod.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace lodadapt {

enum class IndicatorMode { fine, coarse };

struct AdaptiveOptions {
  double tol = 0.0;
  IndicatorMode mode = IndicatorMode::fine;
  /// Recompute every element without evaluating indicators.
  bool always_recompute = false;
  /// Coarse mode: retain the correctors anyway (needed for reconstruction).
  bool keep_correctors = false;
  /// Build face flux tables at every recomputation.
  bool flux_tables = false;
  /// Coarse mode: compare E = max(E_u, E_f, E_g) itself with TOL instead of
  /// its square root.
  bool squared_threshold = false;
  /// Take the boundary term (A∇g, ∇φ_i)_T of the right side with the lagging
  /// Ã_T, stored with the element, instead of the current coefficient.
  bool lagging_boundary_load = false;
  int threads = 1;
};

/// Indicator values (not squared) of one element at one step.
struct ElementIndicators {
  double e_u = 0.0;
  double e_f = 0.0;
  double e_g = 0.0;
  double max() const;
};

/// Everything kept for one element between steps.
struct ElementRecord {
  int age = -1; ///< step of the last recomputation
  std::optional<CorrectorSet> correctors;
  ElementContribution contribution;
  MuTable mu;
  /// Ã_T on the patch fine cells (coarse mode with a general coefficient).
  Coefficient snapshot;
  /// λ̃ for the elements of `mu` (coarse mode with a mobility field).
  std::vector<double> lagging_mobility;
  std::optional<FluxTable> flux;
};

struct StepResult {
  int n = 0;
  CoarseFunction alpha;
  std::vector<char> recomputed;              ///< per element
  std::vector<ElementIndicators> indicators; ///< values before recomputation
  int count = 0;
  double fraction = 0.0;
  double wall_ms = 0.0;
};

class AdaptiveSolver {
public:
  AdaptiveSolver(const LodContext& ctx, AdaptiveOptions options);

  const LodContext& context() const { return *ctx_; }
  const AdaptiveOptions& options() const { return options_; }
  bool initialized() const { return initialized_; }
  const std::vector<ElementRecord>& records() const { return records_; }

  /// Computes every element with Ã_T = a. `mobility` (one value per coarse
  /// element) switches the coarse indicators to δ_T = (λ̃ − λ)/√(λ̃λ); it
  /// must then be passed to every step.
  void initialize(const Coefficient& a, const Eigen::VectorXd* mobility = nullptr, int n = 0);

  /// Indicators against a, recomputation where max ≥ tol, assembly with the
  /// mixed store and the coarse solve.
  StepResult step(int n, const Coefficient& a, const Eigen::VectorXd* mobility = nullptr);

  /// Indicators of every element against a, without changing the store.
  std::vector<ElementIndicators> indicators(const Coefficient& a, const Eigen::VectorXd* mobility = nullptr) const;

  /// Fine reconstruction; StateError if correctors were discarded.
  FineFunction reconstruct(const CoarseFunction& alpha) const;
  /// Pre-flux from the stored tables; StateError if tables were not built.
  FluxField preflux(const CoarseFunction& alpha, const Coefficient* a = nullptr) const;

  /// One binary file per element plus a manifest.
  void save(const std::filesystem::path& dir) const;
  /// Replaces the store; the context and options must match the saved run.
  void load(const std::filesystem::path& dir);

private:
  void recompute(int element, int n, const Coefficient& a, const Eigen::VectorXd* mobility);
  ElementIndicators evaluate(int element, const Coefficient& a, const Eigen::VectorXd* mobility) const;

  const LodContext* ctx_;
  AdaptiveOptions options_;
  bool initialized_ = false;
  bool mobility_mode_ = false;
  std::vector<ElementRecord> records_;
};

/// FNV-1a hash of the coefficient values, for checkpoint integrity.
std::uint64_t coefficient_hash(const Coefficient& a);

} // namespace lodadapt
