#pragma once

/** @file corrector.hpp
    @brief Localized element correctors Q̃_{k,T}φ_i, R̃_{k,T}f, Q̃_{k,T}g on
    patches, and the per-element blocks of the Petrov–Galerkin system.
*/

#include "lodadapt/fem.hpp"
#include "lodadapt/grid.hpp"
#include "lodadapt/interp.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace lodadapt {

/// Problem data shared by every element computation: mesh, source, boundary
/// function, layer count and the precomputed interpolation operator.
class LodContext {
public:
  LodContext(MeshPair mesh, Source f, FineFunction g, int layers, bool include_rhs_correction = true);

  const MeshPair& mesh() const { return mesh_; }
  const FaceSet& faces() const { return faces_; }
  const Source& f() const { return f_; }
  const FineFunction& g() const { return g_; }
  int layers() const { return layers_; }
  bool include_rhs_correction() const { return include_rhs_; }
  const RowSparse& interpolation() const { return interp_; }
  const LocalMatrices& local() const { return local_; }

  Patch patch(int element) const { return make_patch(mesh_, element, layers_); }
  /// Global coarse node indices of the corners of an element.
  std::array<int, 8> element_nodes(int element) const;

private:
  MeshPair mesh_;
  FaceSet faces_;
  Source f_;
  FineFunction g_;
  int layers_;
  bool include_rhs_;
  RowSparse interp_;
  LocalMatrices local_;
};

/// Correctors of one element on its patch.
///
/// Column layout of the "corrected" functions used by indicators and flux
/// tables: F_i = χ_T φ_i − Q̃φ_i for the corners i < m, F_g = χ_T g − Q̃g at
/// column m and F_f = R̃f at column m + 1.
struct CorrectorSet {
  int element = 0;
  Patch patch;
  IndexBox center_cells; ///< fine cells of T
  IndexBox center_nodes; ///< fine nodes of T
  int m = 0;             ///< 2^d
  /// Patch fine nodes x (m + 2): Q̃φ_0..Q̃φ_{m-1}, Q̃g, R̃f. Zero on fixed dofs.
  Eigen::MatrixXd corr;
  /// Fine nodes of T x (m + 1): φ_0..φ_{m-1}, g.
  Eigen::MatrixXd chi;
  Coefficient snapshot; ///< Ã_T on the patch fine cells

  int columns() const { return m + 2; }
  int col_g() const { return m; }
  int col_f() const { return m + 1; }

  /// Corner values of all columns F on one fine cell of the patch;
  /// out[col * 8 + corner].
  void cell_values(const CornerOffsets& patch_offsets, const IVec& cell, double* out) const;
};

/// Patch, center boxes and χ_T values of an element; corr and snapshot empty.
CorrectorSet corrector_frame(const LodContext& ctx, int element);

/// Solves the constrained patch problems with coefficient `a` (needs values on
/// every fine cell of the patch). Throws ConfigError if the kernel constraints
/// are rank deficient.
CorrectorSet compute_element_correctors(const LodContext& ctx, int element, const Coefficient& a);

/// Per-element blocks of the lagging forms ã_T and L̃_T (corrector part).
struct ElementContribution {
  int element = 0;
  std::vector<int> rows;          ///< global coarse nodes of the patch closure
  std::array<int, 8> cols{};      ///< global coarse nodes of the corners of T
  Eigen::MatrixXd stiffness;      ///< rows x 2^d
  Eigen::VectorXd load;           ///< rows
};

/// (K_T)_{ij} = (Ã_T(χ_T∇φ_j − ∇Q̃φ_j), ∇φ_i) over the patch.
ElementContribution stiffness_contribution(const LodContext& ctx, const CorrectorSet& cs);
/// Adds b̃_T = −(Ã_T∇R̃f, ∇φ_i) + (Ã_T∇Q̃g, ∇φ_i) to the contribution.
void load_contribution(const LodContext& ctx, const CorrectorSet& cs, ElementContribution& out);

/// Adds −(Ã_T∇g, ∇φ_i)_T, the boundary term of L̃_T taken with the lagging
/// coefficient instead of the true one.
void boundary_load_contribution(const LodContext& ctx, const CorrectorSet& cs, ElementContribution& out);

/// Both of the above.
ElementContribution element_contribution(const LodContext& ctx, const CorrectorSet& cs);

namespace detail {

template <int N, class Weight, class Group>
void accumulate_grams(const LodContext& ctx, const CorrectorSet& cs, const IndexBox& cells, Weight& weight,
                      Group& group, std::vector<Eigen::MatrixXd>& out) {
  const CornerOffsets co(ctx.mesh().dim(), cs.patch.fine_nodes);
  const int nc = cs.columns();
  const Eigen::Map<const Eigen::Matrix<double, N, N, Eigen::RowMajor>, 0, Eigen::OuterStride<8>> k(
      ctx.local().stiffness.data());
  Eigen::Matrix<double, 8, Eigen::Dynamic> buf(8, nc);
  Eigen::Matrix<double, N, Eigen::Dynamic> kv(N, nc);
  for_each_index(cells, [&](const IVec& c) {
    cs.cell_values(co, c, buf.data());
    const auto v = buf.template topRows<N>();
    kv.noalias() = k * v;
    out[group(c)].noalias() += weight(c) * (v.transpose() * kv);
  });
}

template <int N, class Weight>
Eigen::MatrixXd center_gram(const LodContext& ctx, const CorrectorSet& cs, Weight& weight) {
  const CornerOffsets co(ctx.mesh().dim(), cs.center_nodes);
  const int nc = cs.m + 1;
  const Eigen::Map<const Eigen::Matrix<double, N, N, Eigen::RowMajor>, 0, Eigen::OuterStride<8>> k(
      ctx.local().stiffness.data());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nc, nc);
  Eigen::Matrix<double, N, Eigen::Dynamic> v(N, nc);
  for_each_index(cs.center_cells, [&](const IVec& c) {
    const int base = cs.center_nodes.linear(c);
    for (int col = 0; col < nc; ++col)
      for (int i = 0; i < N; ++i)
        v(i, col) = cs.chi(base + co.offset[i], col);
    gram.noalias() += weight(c) * (v.transpose() * (k * v));
  });
  return gram;
}

} // namespace detail

/// Gram matrices Σ_cells w(cell) F_iᵀ K_ref F_j of the corrected functions,
/// accumulated per group: out[group(cell)] for the fine cells of `cells`
/// (inside the patch). Each out entry must be (m+2) x (m+2).
template <class Weight, class Group>
void corrected_grams(const LodContext& ctx, const CorrectorSet& cs, const IndexBox& cells, Weight&& weight,
                     Group&& group, std::vector<Eigen::MatrixXd>& out) {
  switch (ctx.local().n) {
  case 2:
    return detail::accumulate_grams<2>(ctx, cs, cells, weight, group, out);
  case 4:
    return detail::accumulate_grams<4>(ctx, cs, cells, weight, group, out);
  default:
    return detail::accumulate_grams<8>(ctx, cs, cells, weight, group, out);
  }
}

/// Single (m+2) x (m+2) Gram matrix of the corrected functions over `cells`.
template <class Weight>
Eigen::MatrixXd corrected_gram(const LodContext& ctx, const CorrectorSet& cs, const IndexBox& cells,
                               Weight&& weight) {
  std::vector<Eigen::MatrixXd> out(1, Eigen::MatrixXd::Zero(cs.columns(), cs.columns()));
  const auto one = [](const IVec&) { return 0; };
  corrected_grams(ctx, cs, cells, weight, one, out);
  return out[0];
}

/// Gram matrix of the uncorrected coarse basis and g on T: entries
/// Σ_{cells of T} w φ_iᵀ K_ref φ_j, indices 0..m-1 basis, m = g.
template <class Weight>
Eigen::MatrixXd center_gram(const LodContext& ctx, const CorrectorSet& cs, Weight&& weight) {
  switch (ctx.local().n) {
  case 2:
    return detail::center_gram<2>(ctx, cs, weight);
  case 4:
    return detail::center_gram<4>(ctx, cs, weight);
  default:
    return detail::center_gram<8>(ctx, cs, weight);
  }
}

} // namespace lodadapt
