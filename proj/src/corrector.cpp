#include "lodadapt/corrector.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/linalg.hpp"

#include <string>

namespace lodadapt {

LodContext::LodContext(MeshPair mesh, Source f, FineFunction g, int layers, bool include_rhs_correction)
    : mesh_(std::move(mesh)), faces_(mesh_), f_(std::move(f)), g_(std::move(g)), layers_(layers),
      include_rhs_(include_rhs_correction), interp_(interpolation_matrix(mesh_)), local_(mesh_) {
  if (layers_ < 0)
    throw ConfigError("patch layer count must be >= 0");
  if (g_.size() != mesh_.num_fine_nodes())
    throw ConfigError("boundary function has " + std::to_string(g_.size()) + " values, expected " +
                      std::to_string(mesh_.num_fine_nodes()));
  if (f_.kind == Source::Kind::nodal && f_.values.size() != mesh_.num_fine_nodes())
    throw ConfigError("nodal source has wrong length");
  if (f_.kind == Source::Kind::cellwise && f_.values.size() != mesh_.num_fine_cells())
    throw ConfigError("cellwise source has wrong length");
}

std::array<int, 8> LodContext::element_nodes(int element) const {
  const IVec t = mesh_.coarse_cell_box().coords(element);
  const IndexBox nodes = mesh_.coarse_node_box();
  std::array<int, 8> out{};
  out.fill(-1);
  for (int c = 0; c < mesh_.corners(); ++c) {
    const IVec o = corner_offset(c);
    out[c] = nodes.linear({t[0] + o[0], t[1] + o[1], t[2] + o[2]});
  }
  return out;
}

void CorrectorSet::cell_values(const CornerOffsets& patch_offsets, const IVec& cell, double* out) const {
  const int n = patch_offsets.n;
  const int base = patch.fine_nodes.linear(cell);
  const bool inside = center_cells.contains(cell);
  int cbase = 0;
  int coff[8] = {};
  if (inside) {
    cbase = center_nodes.linear(cell);
    const int sx = center_nodes.extent(0), sy = center_nodes.extent(0) * center_nodes.extent(1);
    for (int i = 0; i < n; ++i) {
      const IVec o = corner_offset(i);
      coff[i] = o[0] + sx * o[1] + sy * o[2];
    }
  }
  for (int col = 0; col <= m; ++col)
    for (int i = 0; i < n; ++i) {
      const double q = corr(base + patch_offsets.offset[i], col);
      out[col * 8 + i] = (inside ? chi(cbase + coff[i], col) : 0.0) - q;
    }
  for (int i = 0; i < n; ++i)
    out[(m + 1) * 8 + i] = corr(base + patch_offsets.offset[i], m + 1);
}

namespace {

// Fine nodal values of the corner basis functions of T and of g on the fine
// nodes of T.
Eigen::MatrixXd center_values(const LodContext& ctx, const IndexBox& center_nodes) {
  const MeshPair& mesh = ctx.mesh();
  const int m = mesh.corners();
  const IndexBox all = mesh.fine_node_box();
  Eigen::MatrixXd chi(center_nodes.size(), m + 1);
  for_each_index(center_nodes, [&](const IVec& n) {
    const int row = center_nodes.linear(n);
    for (int c = 0; c < m; ++c) {
      const IVec o = corner_offset(c);
      double v = 1.0;
      for (int a = 0; a < mesh.dim(); ++a) {
        const double s = static_cast<double>(n[a] - center_nodes.lo[a]) / mesh.refinement()[a];
        v *= o[a] ? s : 1.0 - s;
      }
      chi(row, c) = v;
    }
    chi(row, m) = ctx.g()[all.linear(n)];
  });
  return chi;
}

// Column of chi embedded into a patch fine node vector.
Eigen::VectorXd embed_center(const CorrectorSet& cs, int col) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cs.patch.fine_nodes.size());
  for_each_index(cs.center_nodes, [&](const IVec& n) {
    x[cs.patch.fine_nodes.linear(n)] = cs.chi(cs.center_nodes.linear(n), col);
  });
  return x;
}

} // namespace

CorrectorSet corrector_frame(const LodContext& ctx, int element) {
  const MeshPair& mesh = ctx.mesh();
  CorrectorSet cs;
  cs.element = element;
  cs.patch = ctx.patch(element);
  cs.m = mesh.corners();
  cs.center_cells = mesh.fine_cells_of(cs.patch.center_cell);
  cs.center_nodes = cs.center_cells;
  for (int ax = 0; ax < mesh.dim(); ++ax)
    cs.center_nodes.hi[ax] += 1;
  cs.chi = center_values(ctx, cs.center_nodes);
  return cs;
}

CorrectorSet compute_element_correctors(const LodContext& ctx, int element, const Coefficient& a) {
  const MeshPair& mesh = ctx.mesh();
  CorrectorSet cs = corrector_frame(ctx, element);
  cs.snapshot = a.restrict(cs.patch.fine_cells);

  const Patch& p = cs.patch;
  const int np = p.fine_nodes.size();
  const int ncols = cs.columns();
  const auto weight = [&](const IVec& c) { return cs.snapshot.at(c); };

  // Right sides over all patch nodes: (Ã χ_T∇φ_i, ∇·), (Ã χ_T∇g, ∇·), (f, ·)_T.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(np, ncols);
  for (int col = 0; col <= cs.m; ++col) {
    const Eigen::VectorXd x = embed_center(cs, col);
    apply_weighted_stiffness(mesh, ctx.local(), cs.center_cells, p.fine_nodes, weight, x.data(),
                             rhs.col(col).data());
  }
  if (ctx.include_rhs_correction())
    add_source_load(mesh, ctx.local(), cs.center_cells, p.fine_nodes, ctx.f(), rhs.col(cs.col_f()).data());

  const DofPartition part = classify_fine_dofs(mesh, p);
  const int nfree = static_cast<int>(part.free.size());
  cs.corr = Eigen::MatrixXd::Zero(np, ncols);
  if (nfree == 0)
    return cs;

  Eigen::MatrixXd r(nfree, ncols);
  for (int i = 0; i < nfree; ++i)
    r.row(i) = rhs.row(part.free[i]);

  const SparseCholesky chol(assemble_stiffness(mesh, p.fine_cells, p.fine_nodes, cs.snapshot, part.free_index));
  const RowSparse c = kernel_constraints(mesh, ctx.interpolation(), p, part);
  Eigen::MatrixXd w = chol.forward(r);
  if (c.rows() > 0) {
    const Eigen::MatrixXd z = chol.forward(Eigen::MatrixXd(c.transpose()));
    const Eigen::MatrixXd s = z.transpose() * z;
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    const double smax = s.diagonal().maxCoeff();
    const double lmin = llt.matrixLLT().diagonal().minCoeff();
    if (llt.info() != Eigen::Success || !(lmin * lmin > 1e-13 * smax))
      throw ConfigError("kernel constraints of element " + std::to_string(element) +
                        " are rank deficient; the saddle-point system is singular");
    const Eigen::MatrixXd lambda = llt.solve(z.transpose() * w);
    w.noalias() -= z * lambda;
  }
  const Eigen::MatrixXd q = chol.backward(w);
  for (int i = 0; i < nfree; ++i)
    cs.corr.row(part.free[i]) = q.row(i);
  return cs;
}

ElementContribution stiffness_contribution(const LodContext& ctx, const CorrectorSet& cs) {
  const MeshPair& mesh = ctx.mesh();
  const Patch& p = cs.patch;
  ElementContribution out;
  out.element = cs.element;
  out.cols = ctx.element_nodes(cs.element);
  const IndexBox all = mesh.coarse_node_box();
  for_each_index(p.coarse_nodes, [&](const IVec& x) { out.rows.push_back(all.linear(x)); });

  const auto weight = [&](const IVec& c) { return cs.snapshot.at(c); };
  const auto negative = [&](const IVec& c) { return -cs.snapshot.at(c); };
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(p.fine_nodes.size(), cs.m);
  for (int j = 0; j < cs.m; ++j) {
    const Eigen::VectorXd x = embed_center(cs, j);
    apply_weighted_stiffness(mesh, ctx.local(), cs.center_cells, p.fine_nodes, weight, x.data(), y.col(j).data());
    apply_weighted_stiffness(mesh, ctx.local(), p.fine_cells, p.fine_nodes, negative, cs.corr.col(j).data(),
                             y.col(j).data());
  }
  out.stiffness = restrict_adjoint(mesh, p.coarse_nodes, p.fine_nodes, y);
  out.load = Eigen::VectorXd::Zero(static_cast<int>(out.rows.size()));
  return out;
}

void load_contribution(const LodContext& ctx, const CorrectorSet& cs, ElementContribution& out) {
  const MeshPair& mesh = ctx.mesh();
  const Patch& p = cs.patch;
  const Eigen::VectorXd x = cs.corr.col(cs.col_g()) - cs.corr.col(cs.col_f());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p.fine_nodes.size());
  apply_weighted_stiffness(mesh, ctx.local(), p.fine_cells, p.fine_nodes,
                           [&](const IVec& c) { return cs.snapshot.at(c); }, x.data(), y.data());
  out.load = restrict_adjoint(mesh, p.coarse_nodes, p.fine_nodes, y);
}

void boundary_load_contribution(const LodContext& ctx, const CorrectorSet& cs, ElementContribution& out) {
  const Patch& p = cs.patch;
  const Eigen::VectorXd x = embed_center(cs, cs.col_g());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p.fine_nodes.size());
  apply_weighted_stiffness(ctx.mesh(), ctx.local(), cs.center_cells, p.fine_nodes,
                           [&](const IVec& c) { return -cs.snapshot.at(c); }, x.data(), y.data());
  out.load += restrict_adjoint(ctx.mesh(), p.coarse_nodes, p.fine_nodes, y);
}

ElementContribution element_contribution(const LodContext& ctx, const CorrectorSet& cs) {
  ElementContribution out = stiffness_contribution(ctx, cs);
  load_contribution(ctx, cs, out);
  return out;
}

} // namespace lodadapt
