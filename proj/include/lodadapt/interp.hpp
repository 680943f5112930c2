#pragma once

/** @file interp.hpp
    @brief Quasi-interpolation I_H = E_H ∘ Π_H, coarse-to-fine prolongation and
    the linear constraints that cut the fine space V^f out of a patch.
*/

#include "lodadapt/fem.hpp"
#include "lodadapt/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lodadapt {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Elementwise Q1 coefficients: column = coarse cell, row = local corner.
struct BrokenCoarse {
  Eigen::MatrixXd values;
};

/// Local L2 projection on one coarse cell, as a map from the (r+1)^d fine
/// nodes of the cell (lexicographic) to the 2^d corner values.
Eigen::MatrixXd projection_stencil(const MeshPair& mesh);

BrokenCoarse project_broken(const MeshPair& mesh, const FineFunction& v);
CoarseFunction node_average(const MeshPair& mesh, const BrokenCoarse& b);
CoarseFunction interpolate(const MeshPair& mesh, const FineFunction& v);

/// I_H as a sparse matrix, coarse nodes x fine nodes (Γ_D rows are empty).
RowSparse interpolation_matrix(const MeshPair& mesh);

/// Calls fn(coarse_node, weight) for each coarse basis function that is
/// nonzero at the fine node.
template <class Fn>
void for_each_prolongation_weight(const MeshPair& mesh, const IVec& fine_node, Fn&& fn) {
  const int d = mesh.dim();
  IVec q{0, 0, 0};
  double w[kMaxDim][2] = {{1, 0}, {1, 0}, {1, 0}};
  int two[kMaxDim] = {1, 1, 1};
  for (int a = 0; a < d; ++a) {
    const int r = mesh.refinement()[a];
    q[a] = fine_node[a] / r;
    const int s = fine_node[a] % r;
    if (s != 0) {
      two[a] = 2;
      w[a][1] = static_cast<double>(s) / r;
      w[a][0] = 1.0 - w[a][1];
    }
  }
  IVec o;
  for (o[2] = 0; o[2] < two[2]; ++o[2])
    for (o[1] = 0; o[1] < two[1]; ++o[1])
      for (o[0] = 0; o[0] < two[0]; ++o[0])
        fn(IVec{q[0] + o[0], q[1] + o[1], q[2] + o[2]}, w[0][o[0]] * w[1][o[1]] * w[2][o[2]]);
}

/// Nodal interpolation of coarse functions given on `coarse_nodes` onto the
/// aligned fine node box `fine_nodes` (one column per function).
Eigen::MatrixXd prolongate(const MeshPair& mesh, const IndexBox& coarse_nodes,
                           const IndexBox& fine_nodes, const Eigen::MatrixXd& coarse);
FineFunction prolongate(const MeshPair& mesh, const CoarseFunction& coarse);

/// Transpose of prolongate: y_coarse(i) = Σ_fine φ_i(x_fine) y(fine).
Eigen::MatrixXd restrict_adjoint(const MeshPair& mesh, const IndexBox& coarse_nodes,
                                 const IndexBox& fine_nodes, const Eigen::MatrixXd& fine);

/// Rows: constrained coarse nodes of the partition; columns: free fine dofs.
/// C v = 0 iff I_H of the zero extension of v vanishes.
RowSparse kernel_constraints(const MeshPair& mesh, const RowSparse& interp, const Patch& patch,
                             const DofPartition& part);

} // namespace lodadapt
