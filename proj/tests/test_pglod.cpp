#include "lodadapt/error.hpp"
#include "lodadapt/field.hpp"
#include "lodadapt/interp.hpp"
#include "lodadapt/pglod.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace lodadapt;
using testing::unit_mesh;

namespace {

FineFunction linear_g(const MeshPair& mesh) {
  return sample_fine(mesh, [](const DVec& x) { return 1.0 - x[0]; });
}

Source smooth_source(const MeshPair& mesh) {
  return Source::nodal(sample_fine(mesh, [](const DVec& x) { return 1.0 + std::sin(3.0 * x[0]) * x[1]; }));
}

struct Pipeline {
  std::vector<CorrectorSet> correctors;
  std::vector<ElementContribution> blocks;
  GlobalSystem system;
  CoarseFunction alpha;
  FineFunction u;
};

Pipeline run(const LodContext& ctx, const Coefficient& a) {
  Pipeline p;
  const int n = ctx.mesh().num_coarse_cells();
  for (int e = 0; e < n; ++e) {
    p.correctors.push_back(compute_element_correctors(ctx, e, a));
    p.blocks.push_back(element_contribution(ctx, p.correctors.back()));
  }
  p.system = assemble_global(ctx, p.blocks, true_load(ctx, a));
  p.alpha = solve_coarse(p.system);
  std::vector<const CorrectorSet*> ptrs;
  for (const auto& c : p.correctors)
    ptrs.push_back(&c);
  p.u = reconstruct(ctx, p.alpha, ptrs);
  return p;
}

FineFunction embed(const MeshPair& mesh, const CorrectorSet& cs, int col) {
  const IndexBox all = mesh.fine_node_box();
  FineFunction v = FineFunction::Zero(all.size());
  for_each_index(cs.patch.fine_nodes,
                 [&](const IVec& n) { v[all.linear(n)] = cs.corr(cs.patch.fine_nodes.linear(n), col); });
  return v;
}

SparseMatrix fine_stiffness(const MeshPair& mesh, const Coefficient& a) {
  std::vector<int> all(mesh.num_fine_nodes());
  for (int i = 0; i < mesh.num_fine_nodes(); ++i)
    all[i] = i;
  return assemble_stiffness(mesh, mesh.fine_cell_box(), mesh.fine_node_box(), a, all);
}

} // namespace

TEST_CASE("global patches reproduce the fine solution") {
  const MeshPair mesh = unit_mesh(2, 4, 8);
  const Coefficient a = checkerboard_base(mesh, 3);
  const LodContext ctx(mesh, smooth_source(mesh), linear_g(mesh), 4);
  const Pipeline p = run(ctx, a);
  const FineFunction uh = solve_fine_reference(mesh, a, ctx.f(), ctx.g());
  const double err = norms(mesh, uh - p.u, a).energy;
  const double ref = norms(mesh, uh + ctx.g(), a).energy;
  CHECK(err / ref <= 1e-9);
}

TEST_CASE("1D method is nodally exact with a global patch") {
  std::mt19937_64 rng(21);
  const MeshPair mesh = unit_mesh(1, 6, 5);
  for (bool constant : {true, false}) {
    const Coefficient a = constant ? testing::constant_coefficient(mesh, 1.7) : testing::random_coefficient(rng, mesh);
    const LodContext ctx(mesh, smooth_source(mesh), sample_fine(mesh, [](const DVec& x) { return 2.0 * x[0]; }), 6);
    const Pipeline p = run(ctx, a);
    const FineFunction uh = solve_fine_reference(mesh, a, ctx.f(), ctx.g());
    CHECK((uh - p.u).cwiseAbs().maxCoeff() <= 1e-11 * uh.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("assembled system equals the monolithic Petrov-Galerkin system") {
  std::mt19937_64 rng(22);
  const MeshPair mesh = unit_mesh(2, 4, 4);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const LodContext ctx(mesh, smooth_source(mesh), linear_g(mesh), 1);
  const Pipeline p = run(ctx, a);

  // Global corrector sums: Q_k φ_j, Q_k g, R_k f.
  const int nc = mesh.num_coarse_nodes();
  const int nf = mesh.num_fine_nodes();
  const IndexBox cn = mesh.coarse_node_box();
  Eigen::MatrixXd qphi = Eigen::MatrixXd::Zero(nf, nc);
  FineFunction qg = FineFunction::Zero(nf), rf = FineFunction::Zero(nf);
  for (const CorrectorSet& cs : p.correctors) {
    const auto nodes = ctx.element_nodes(cs.element);
    for (int j = 0; j < cs.m; ++j)
      qphi.col(nodes[j]) += embed(mesh, cs, j);
    qg += embed(mesh, cs, cs.col_g());
    rf += embed(mesh, cs, cs.col_f());
  }
  const Eigen::MatrixXd pmat = prolongate(mesh, cn, mesh.fine_node_box(), Eigen::MatrixXd::Identity(nc, nc));
  const SparseMatrix kh = fine_stiffness(mesh, a);
  const Eigen::MatrixXd full = pmat.transpose() * (kh * (pmat - qphi));
  Eigen::VectorXd fload = Eigen::VectorXd::Zero(nf);
  add_source_load(mesh, ctx.local(), mesh.fine_cell_box(), mesh.fine_node_box(), ctx.f(), fload.data());
  const Eigen::VectorXd load = pmat.transpose() * (fload - kh * (ctx.g() + rf - qg));

  const GlobalSystem& sys = p.system;
  const Eigen::MatrixXd got(sys.matrix);
  const int n = static_cast<int>(sys.free_nodes.size());
  double scale = 0.0, diff = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double e = full(sys.free_nodes[i], sys.free_nodes[j]);
      scale = std::max(scale, std::abs(e));
      diff = std::max(diff, std::abs(e - got(i, j)));
    }
  CHECK(diff <= 1e-12 * scale);
  double lscale = 0.0, ldiff = 0.0;
  for (int i = 0; i < n; ++i) {
    lscale = std::max(lscale, std::abs(load[sys.free_nodes[i]]));
    ldiff = std::max(ldiff, std::abs(load[sys.free_nodes[i]] - sys.rhs[i]));
  }
  CHECK(ldiff <= 1e-12 * lscale);
}

TEST_CASE("interpolation of the reconstruction returns the coarse coefficients") {
  std::mt19937_64 rng(23);
  const MeshPair mesh = unit_mesh(2, 4, 4);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const LodContext ctx(mesh, smooth_source(mesh), linear_g(mesh), 1);
  const Pipeline p = run(ctx, a);
  const CoarseFunction ih = interpolate(mesh, p.u);
  CHECK((ih - p.alpha).cwiseAbs().maxCoeff() <= 1e-10 * p.alpha.cwiseAbs().maxCoeff());
}

TEST_CASE("global matrix couples only nodes within the patch reach") {
  std::mt19937_64 rng(24);
  const MeshPair mesh = unit_mesh(2, 6, 2);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const int k = 1;
  const LodContext ctx(mesh, Source::zero(), linear_g(mesh), k);
  const Pipeline p = run(ctx, a);
  const IndexBox cn = mesh.coarse_node_box();
  const Eigen::MatrixXd m(p.system.matrix);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      const IVec x = cn.coords(p.system.free_nodes[i]);
      const IVec y = cn.coords(p.system.free_nodes[j]);
      const int dist = std::max(std::abs(x[0] - y[0]), std::abs(x[1] - y[1]));
      if (dist > k + 1)
        CHECK(m(i, j) == 0.0);
    }
}

TEST_CASE("coarse FEM equals the fine solution when the meshes coincide") {
  std::mt19937_64 rng(25);
  const MeshPair mesh = unit_mesh(2, 8, 1);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const Source f = smooth_source(mesh);
  const FineFunction g = linear_g(mesh);
  const CoarseFunction uc = solve_coarse_fem(mesh, a, f, g);
  const FineFunction uh = solve_fine_reference(mesh, a, f, g);
  CHECK((uc - uh).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("coarse FEM is Galerkin orthogonal on the coarse space") {
  std::mt19937_64 rng(26);
  const MeshPair mesh = unit_mesh(2, 4, 4);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const Source f = smooth_source(mesh);
  const FineFunction g = linear_g(mesh);
  const FineFunction uh = solve_fine_reference(mesh, a, f, g);
  const FineFunction uc = prolongate(mesh, solve_coarse_fem(mesh, a, f, g));
  const SparseMatrix kh = fine_stiffness(mesh, a);
  // (A∇(u_h − u_H), ∇φ_i) = 0 for every free coarse basis function.
  const int nc = mesh.num_coarse_nodes();
  const Eigen::MatrixXd pmat = prolongate(mesh, mesh.coarse_node_box(), mesh.fine_node_box(), Eigen::MatrixXd::Identity(nc, nc));
  const Eigen::VectorXd r = pmat.transpose() * (kh * (uh - uc));
  const IndexBox cn = mesh.coarse_node_box();
  for_each_index(cn, [&](const IVec& x) {
    if (!mesh.is_dirichlet_coarse_node(x))
      CHECK(std::abs(r[cn.linear(x)]) <= 1e-11);
  });
}

TEST_CASE("missing element data is a state error") {
  const MeshPair mesh = unit_mesh(2, 2, 2);
  const LodContext ctx(mesh, Source::zero(), linear_g(mesh), 1);
  const Coefficient a = testing::constant_coefficient(mesh, 1.0);
  std::vector<const ElementContribution*> blocks(4, nullptr);
  CHECK_THROWS_AS(assemble_global(ctx, blocks, true_load(ctx, a)), StateError);
  CHECK_THROWS_AS(assemble_global(ctx, std::vector<const ElementContribution*>(3), true_load(ctx, a)), StateError);
  std::vector<const CorrectorSet*> none(4, nullptr);
  CHECK_THROWS_AS(reconstruct(ctx, CoarseFunction::Zero(9), none), StateError);
}

TEST_CASE("source load plus the boundary term is the true load") {
  std::mt19937_64 rng(24);
  const MeshPair mesh = unit_mesh(2, 4, 4);
  const Coefficient a = testing::random_coefficient(rng, mesh);
  const LodContext ctx(mesh, smooth_source(mesh), linear_g(mesh), 1);
  const int nc = mesh.num_coarse_nodes();
  const Eigen::MatrixXd pmat =
      prolongate(mesh, mesh.coarse_node_box(), mesh.fine_node_box(), Eigen::MatrixXd::Identity(nc, nc));
  const Eigen::VectorXd boundary = -(pmat.transpose() * (fine_stiffness(mesh, a) * ctx.g()));
  const Eigen::VectorXd t = true_load(ctx, a);
  CHECK((source_load(ctx) + boundary - t).cwiseAbs().maxCoeff() <= 1e-12 * t.cwiseAbs().maxCoeff());
  const LodContext none(mesh, Source::zero(), linear_g(mesh), 1);
  CHECK(source_load(none).cwiseAbs().maxCoeff() == 0.0);
}
