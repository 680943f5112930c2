#pragma once

/** @file fem.hpp
    @brief Q1 finite elements on the fine grid: coefficients, element matrices,
    matrix-free kernels, sparse assembly, the fine reference solve and norms.

    Integrands are (piecewise constant coefficient) x (Q1 gradient or value
    products) on boxes, so the tensor-product element matrices used here are
    exact; no quadrature error enters anywhere.
*/

#include "lodadapt/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace lodadapt {

using FineFunction = Eigen::VectorXd;   ///< values at fine nodes (lexicographic)
using CoarseFunction = Eigen::VectorXd; ///< values at coarse nodes (lexicographic)
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Positive scalar field, one value per fine cell of `box()`.
///
/// The global coefficient covers the whole fine cell box; patch snapshots
/// (lagging coefficients) cover a sub-box. Values are looked up by global
/// fine cell coordinates either way.
class Coefficient {
public:
  Coefficient() = default;
  Coefficient(IndexBox cells, std::vector<double> values);

  const IndexBox& box() const { return box_; }
  const std::vector<double>& values() const { return values_; }
  double at(const IVec& cell) const { return values_[box_.linear(cell)]; }
  double min() const { return min_; }
  double max() const { return max_; }
  bool empty() const { return values_.empty(); }

  /// Slice covering `cells`, which must lie inside box().
  Coefficient restrict(const IndexBox& cells) const;
  Coefficient scaled(double factor) const;

private:
  IndexBox box_;
  std::vector<double> values_;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Right-hand side f, given at fine nodes or as fine-cell constants.
struct Source {
  enum class Kind { zero, nodal, cellwise };
  Kind kind = Kind::zero;
  Eigen::VectorXd values;

  static Source zero() { return {}; }
  static Source nodal(Eigen::VectorXd v) { return {Kind::nodal, std::move(v)}; }
  static Source cellwise(Eigen::VectorXd v) { return {Kind::cellwise, std::move(v)}; }
  bool is_zero() const { return kind == Kind::zero; }
};

/// Dense element stiffness of Q1 on a box with extents h and coefficient a.
/// Local node order is lexicographic over corners (bit a = upper along axis a).
Eigen::MatrixXd element_stiffness(int dim, const DVec& h, double a);
Eigen::MatrixXd element_mass(int dim, const DVec& h);

/// Unit-coefficient fine element matrices in a flat fixed-size layout.
struct LocalMatrices {
  int n = 0;
  std::array<double, 64> stiffness{};
  std::array<double, 64> mass{};

  explicit LocalMatrices(const MeshPair& mesh);
};

/// Linear offsets of the 2^d corners of a cell inside a node box.
struct CornerOffsets {
  int n = 0;
  std::array<int, 8> offset{};

  CornerOffsets(int dim, const IndexBox& nodes);
};

/// y += sum over cells of w(cell) * K_ref * x|cell, with x and y indexed by
/// `nodes`. `weight` is any callable IVec -> double.
template <class Weight>
void apply_weighted_stiffness(const MeshPair& mesh, const LocalMatrices& lm, const IndexBox& cells,
                              const IndexBox& nodes, Weight&& weight, const double* x, double* y) {
  const CornerOffsets co(mesh.dim(), nodes);
  const int n = lm.n;
  for_each_index(cells, [&](const IVec& c) {
    const int base = nodes.linear(c);
    const double w = weight(c);
    double xl[8];
    for (int i = 0; i < n; ++i)
      xl[i] = x[base + co.offset[i]];
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        s += lm.stiffness[i * 8 + j] * xl[j];
      y[base + co.offset[i]] += w * s;
    }
  });
}

/// y += mass-weighted load of f over `cells` (exact Q1 mass integration).
void add_source_load(const MeshPair& mesh, const LocalMatrices& lm, const IndexBox& cells,
                     const IndexBox& nodes, const Source& f, double* y);

/// Stiffness over the fine cells of `cells`, restricted to the nodes of
/// `nodes` with free_index >= 0. Full symmetric storage.
SparseMatrix assemble_stiffness(const MeshPair& mesh, const IndexBox& cells, const IndexBox& nodes,
                                const Coefficient& a, const std::vector<int>& free_index);

/// Galerkin solution u in V_h (zero on Γ_D) of (A∇u,∇v) = (f,v) − (A∇g,∇v).
FineFunction solve_fine_reference(const MeshPair& mesh, const Coefficient& a, const Source& f,
                                  const FineFunction& g);

struct Norms {
  double energy = 0.0; ///< |v|_{A,region}
  double l2 = 0.0;     ///< ||v||_{L2(region)}
};

/// Norms of a global fine function over the fine cells of `cells`.
Norms norms(const MeshPair& mesh, const FineFunction& v, const Coefficient& a,
            const IndexBox& cells);
Norms norms(const MeshPair& mesh, const FineFunction& v, const Coefficient& a);

/// Squared L2 norm of f over the fine cells of `cells`.
double source_l2_squared(const MeshPair& mesh, const LocalMatrices& lm, const IndexBox& cells,
                         const Source& f);

/// Fine nodal interpolant of a point function.
template <class Fn>
FineFunction sample_fine(const MeshPair& mesh, Fn&& fn) {
  const IndexBox nodes = mesh.fine_node_box();
  FineFunction v(nodes.size());
  for_each_index(nodes, [&](const IVec& n) { v[nodes.linear(n)] = fn(mesh.fine_node_point(n)); });
  return v;
}

} // namespace lodadapt
