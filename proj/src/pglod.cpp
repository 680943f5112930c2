#include "lodadapt/pglod.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/interp.hpp"
#include "lodadapt/linalg.hpp"

#include <Eigen/SparseLU>

#include <string>

namespace lodadapt {

namespace {

std::vector<int> coarse_free_index(const MeshPair& mesh, std::vector<int>& free_nodes) {
  const IndexBox nodes = mesh.coarse_node_box();
  std::vector<int> index(nodes.size(), -1);
  for_each_index(nodes, [&](const IVec& x) {
    if (!mesh.is_dirichlet_coarse_node(x)) {
      index[nodes.linear(x)] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(nodes.linear(x));
    }
  });
  return index;
}

} // namespace

Eigen::VectorXd true_load(const LodContext& ctx, const Coefficient& a) {
  const MeshPair& mesh = ctx.mesh();
  const IndexBox cells = mesh.fine_cell_box();
  const IndexBox nodes = mesh.fine_node_box();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(nodes.size());
  add_source_load(mesh, ctx.local(), cells, nodes, ctx.f(), y.data());
  apply_weighted_stiffness(mesh, ctx.local(), cells, nodes, [&](const IVec& c) { return -a.at(c); },
                           ctx.g().data(), y.data());
  return restrict_adjoint(mesh, mesh.coarse_node_box(), nodes, y);
}

Eigen::VectorXd source_load(const LodContext& ctx) {
  const MeshPair& mesh = ctx.mesh();
  const IndexBox nodes = mesh.fine_node_box();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(nodes.size());
  add_source_load(mesh, ctx.local(), mesh.fine_cell_box(), nodes, ctx.f(), y.data());
  return restrict_adjoint(mesh, mesh.coarse_node_box(), nodes, y);
}

GlobalSystem assemble_global(const LodContext& ctx, const std::vector<const ElementContribution*>& contributions,
                             const Eigen::VectorXd& load) {
  const MeshPair& mesh = ctx.mesh();
  if (static_cast<int>(contributions.size()) != mesh.num_coarse_cells())
    throw StateError("expected " + std::to_string(mesh.num_coarse_cells()) + " element contributions, got " +
                     std::to_string(contributions.size()));
  GlobalSystem sys;
  sys.free_index = coarse_free_index(mesh, sys.free_nodes);
  const int n = static_cast<int>(sys.free_nodes.size());
  sys.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t e = 0; e < contributions.size(); ++e) {
    const ElementContribution* c = contributions[e];
    if (!c)
      throw StateError("element " + std::to_string(e) + " has no contribution");
    for (size_t r = 0; r < c->rows.size(); ++r) {
      const int i = sys.free_index[c->rows[r]];
      if (i < 0)
        continue;
      sys.rhs[i] += c->load[r];
      for (int j = 0; j < mesh.corners(); ++j) {
        const int col = sys.free_index[c->cols[j]];
        if (col >= 0 && c->stiffness(r, j) != 0.0)
          trips.emplace_back(i, col, c->stiffness(r, j));
      }
    }
  }
  for (int i = 0; i < n; ++i)
    sys.rhs[i] += load[sys.free_nodes[i]];
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

GlobalSystem assemble_global(const LodContext& ctx, const std::vector<ElementContribution>& contributions,
                             const Eigen::VectorXd& load) {
  std::vector<const ElementContribution*> ptrs;
  ptrs.reserve(contributions.size());
  for (const auto& c : contributions)
    ptrs.push_back(&c);
  return assemble_global(ctx, ptrs, load);
}

CoarseFunction solve_coarse(const GlobalSystem& sys) {
  CoarseFunction alpha = CoarseFunction::Zero(static_cast<int>(sys.free_index.size()));
  if (sys.free_nodes.empty())
    return alpha;
  SparseMatrix a = sys.matrix;
  a.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw SolverError("coarse Petrov-Galerkin matrix is singular (" + lu.lastErrorMessage() +
                      "); the patch size may be too small for the coefficient contrast");
  const Eigen::VectorXd x = lu.solve(sys.rhs);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw SolverError("coarse solve failed");
  for (size_t i = 0; i < sys.free_nodes.size(); ++i)
    alpha[sys.free_nodes[i]] = x[i];
  return alpha;
}

FineFunction reconstruct(const LodContext& ctx, const CoarseFunction& alpha,
                         const std::vector<const CorrectorSet*>& correctors) {
  const MeshPair& mesh = ctx.mesh();
  if (static_cast<int>(correctors.size()) != mesh.num_coarse_cells())
    throw StateError("reconstruction needs correctors of every element");
  FineFunction u = prolongate(mesh, alpha);
  const IndexBox all = mesh.fine_node_box();
  for (size_t e = 0; e < correctors.size(); ++e) {
    const CorrectorSet* cs = correctors[e];
    if (!cs)
      throw StateError("correctors of element " + std::to_string(e) +
                       " are not retained (coarse-indicator mode discards them)");
    const auto nodes = ctx.element_nodes(static_cast<int>(e));
    Eigen::VectorXd local = cs->corr.col(cs->col_f()) - cs->corr.col(cs->col_g());
    for (int j = 0; j < cs->m; ++j)
      if (alpha[nodes[j]] != 0.0)
        local -= alpha[nodes[j]] * cs->corr.col(j);
    for_each_index(cs->patch.fine_nodes, [&](const IVec& n) {
      u[all.linear(n)] += local[cs->patch.fine_nodes.linear(n)];
    });
  }
  return u;
}

CoarseFunction solve_coarse_fem(const MeshPair& mesh, const Coefficient& a, const Source& f,
                                const FineFunction& g) {
  const IndexBox cells = mesh.fine_cell_box();
  const IndexBox nodes = mesh.fine_node_box();
  const IndexBox coarse = mesh.coarse_node_box();
  const LocalMatrices lm(mesh);
  std::vector<int> all(nodes.size());
  for (int i = 0; i < nodes.size(); ++i)
    all[i] = i;
  const SparseMatrix kh = assemble_stiffness(mesh, cells, nodes, a, all);

  std::vector<int> free_nodes;
  const std::vector<int> free_index = coarse_free_index(mesh, free_nodes);
  std::vector<Eigen::Triplet<double>> trips;
  for_each_index(nodes, [&](const IVec& n) {
    for_each_prolongation_weight(mesh, n, [&](const IVec& x, double w) {
      const int j = free_index[coarse.linear(x)];
      if (j >= 0)
        trips.emplace_back(nodes.linear(n), j, w);
    });
  });
  SparseMatrix p(nodes.size(), static_cast<int>(free_nodes.size()));
  p.setFromTriplets(trips.begin(), trips.end());

  Eigen::VectorXd y = Eigen::VectorXd::Zero(nodes.size());
  add_source_load(mesh, lm, cells, nodes, f, y.data());
  y -= kh * g;
  const SparseMatrix kc = p.transpose() * kh * p;
  const Eigen::VectorXd x = SparseCholesky(kc).solve(p.transpose() * y);
  CoarseFunction u = CoarseFunction::Zero(coarse.size());
  for (size_t i = 0; i < free_nodes.size(); ++i)
    u[free_nodes[i]] = x[i];
  return u;
}

} // namespace lodadapt
