#pragma once

/** @file pglod.hpp
    @brief Global Petrov–Galerkin system: assembly from element blocks, coarse
    solve, fine reconstruction, and the plain coarse Q1 method for comparison.
*/

#include "lodadapt/corrector.hpp"
#include "lodadapt/fem.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace lodadapt {

struct GlobalSystem {
  SparseMatrix matrix;        ///< reduced to non-Dirichlet coarse nodes, nonsymmetric
  Eigen::VectorXd rhs;
  std::vector<int> free_index; ///< coarse node -> reduced index, -1 on Γ_D
  std::vector<int> free_nodes; ///< reduced index -> coarse node
};

/// (f, φ_i) − (A∇g, ∇φ_i) for every coarse node, with the true coefficient.
Eigen::VectorXd true_load(const LodContext& ctx, const Coefficient& a);

/// (f, φ_i) alone.
Eigen::VectorXd source_load(const LodContext& ctx);
/// Sums the stored blocks in element order and adds the true-coefficient
/// load. A null entry throws StateError.
GlobalSystem assemble_global(const LodContext& ctx, const std::vector<const ElementContribution*>& contributions,
                             const Eigen::VectorXd& load);
GlobalSystem assemble_global(const LodContext& ctx, const std::vector<ElementContribution>& contributions,
                             const Eigen::VectorXd& load);

/// Coefficients α of I_H û_k on all coarse nodes (zero on Γ_D).
CoarseFunction solve_coarse(const GlobalSystem& sys);

/// û_k = Σ α_i(φ_i − Q̃φ_i) + R̃f − Q̃g. Null entries throw StateError.
FineFunction reconstruct(const LodContext& ctx, const CoarseFunction& alpha,
                         const std::vector<const CorrectorSet*>& correctors);

/// Standard Galerkin Q1 solution on the coarse mesh with the fine coefficient
/// integrated exactly; returns coarse nodal values of u_H (zero on Γ_D).
CoarseFunction solve_coarse_fem(const MeshPair& mesh, const Coefficient& a, const Source& f,
                                const FineFunction& g);

} // namespace lodadapt
