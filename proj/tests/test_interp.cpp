#include "support.hpp"

#include "lodadapt/interp.hpp"

#include <doctest.h>

using namespace lodadapt;
using namespace testing;

namespace {

// L2 projection onto Q1 on one coarse cell by brute-force quadrature of the
// fine function: solves the local coarse mass system.
Eigen::VectorXd local_projection_oracle(const MeshPair& m, const FineFunction& v, const IVec& t) {
  const int n = m.corners();
  const auto g = gauss_01(2);
  const IndexBox nodes = m.fine_node_box();
  const DVec big = m.coarse_size();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for_each_index(m.fine_cells_of(t), [&](const IVec& c) {
    IVec q{0, 0, 0};
    IVec qn{1, 1, 1};
    for (int a = 0; a < m.dim(); ++a)
      qn[a] = 2;
    for (q[2] = 0; q[2] < qn[2]; ++q[2])
      for (q[1] = 0; q[1] < qn[1]; ++q[1])
        for (q[0] = 0; q[0] < qn[0]; ++q[0]) {
          double w = 1.0;
          DVec tf{0, 0, 0}, tc{0, 0, 0};
          for (int a = 0; a < m.dim(); ++a) {
            tf[a] = g[q[a]].first;
            w *= g[q[a]].second * m.fine_size()[a];
            const double x = (c[a] + tf[a]) * m.fine_size()[a];
            tc[a] = x / big[a] - t[a];
          }
          double val = 0.0;
          for (int k = 0; k < n; ++k) {
            const IVec o = corner_offset(k);
            double b = 1.0;
            for (int a = 0; a < m.dim(); ++a)
              b *= o[a] ? tf[a] : 1.0 - tf[a];
            val += b * v[nodes.linear({c[0] + o[0], c[1] + o[1], c[2] + o[2]})];
          }
          Eigen::VectorXd phi(n);
          for (int k = 0; k < n; ++k) {
            const IVec o = corner_offset(k);
            double b = 1.0;
            for (int a = 0; a < m.dim(); ++a)
              b *= o[a] ? tc[a] : 1.0 - tc[a];
            phi[k] = b;
          }
          mass += w * phi * phi.transpose();
          rhs += w * val * phi;
        }
  });
  return mass.ldlt().solve(rhs);
}

} // namespace

TEST_CASE("broken projection") {
  const MeshPair m1 = unit_mesh(1, 1, 2, {});
  FineFunction hat(3);
  hat << 0, 1, 0;
  const BrokenCoarse b = project_broken(m1, hat);
  CHECK(b.values(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b.values(1, 0) == doctest::Approx(0.5).epsilon(1e-14));

  std::mt19937_64 rng(2);
  for (int d = 1; d <= 3; ++d) {
    const MeshPair m = build_mesh_pair(d, std::vector<std::pair<double, double>>(d, {0.0, 1.5}),
                                       std::vector<int>(d, 3), std::vector<int>(d, d == 3 ? 2 : 3), {0});
    const FineFunction v = random_vector(rng, m.num_fine_nodes());
    const BrokenCoarse pb = project_broken(m, v);
    for_each_index(m.coarse_cell_box(), [&](const IVec& t) {
      const Eigen::VectorXd oracle = local_projection_oracle(m, v, t);
      CHECK((pb.values.col(m.coarse_cell_box().linear(t)) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    });
    // V_H functions are reproduced elementwise
    const CoarseFunction vh = random_vector(rng, m.num_coarse_nodes());
    const BrokenCoarse pv = project_broken(m, prolongate(m, vh));
    for_each_index(m.coarse_cell_box(), [&](const IVec& t) {
      for (int c = 0; c < m.corners(); ++c) {
        const IVec o = corner_offset(c);
        const double expected = vh[m.coarse_node_box().linear({t[0] + o[0], t[1] + o[1], t[2] + o[2]})];
        CHECK(std::abs(pv.values(c, m.coarse_cell_box().linear(t)) - expected) < 1e-13);
      }
    });
  }
}

TEST_CASE("node averaging") {
  const MeshPair m = unit_mesh(2, 2, 1, {});
  BrokenCoarse b{Eigen::MatrixXd::Zero(4, 4)};
  // cells 0..3 touch the center node (1,1) with corners 3, 2, 1, 0
  b.values(3, 0) = 1;
  b.values(2, 1) = 2;
  b.values(1, 2) = 3;
  b.values(0, 3) = 4;
  CHECK(node_average(m, b)[4] == doctest::Approx(2.5));

  const MeshPair md = unit_mesh(2, 2, 1, {0});
  BrokenCoarse ones{Eigen::MatrixXd::Ones(4, 4)};
  const CoarseFunction avg = node_average(md, ones);
  for_each_index(md.coarse_node_box(), [&](const IVec& x) {
    CHECK(avg[md.coarse_node_box().linear(x)] == (md.is_dirichlet_coarse_node(x) ? 0.0 : 1.0));
  });
}

TEST_CASE("quasi-interpolation") {
  const MeshPair m1 = unit_mesh(1, 1, 2, {0});
  FineFunction hat(3);
  hat << 0, 1, 0;
  CHECK(interpolate(m1, hat).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(4);
  const MeshPair m = unit_mesh(2, 4, 4, {0});
  const RowSparse ih = interpolation_matrix(m);
  CoarseFunction vh = random_vector(rng, m.num_coarse_nodes());
  for_each_index(m.coarse_node_box(), [&](const IVec& x) {
    if (m.is_dirichlet_coarse_node(x))
      vh[m.coarse_node_box().linear(x)] = 0.0;
  });
  CHECK((interpolate(m, prolongate(m, vh)) - vh).cwiseAbs().maxCoeff() < 1e-13);
  for (int t = 0; t < 50; ++t) {
    const FineFunction v = random_vector(rng, m.num_fine_nodes());
    const CoarseFunction iv = interpolate(m, v);
    CHECK((ih * v - iv).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(interpolate(m, v - prolongate(m, iv)).cwiseAbs().maxCoeff() < 1e-12);
    const FineFunction w = random_vector(rng, m.num_fine_nodes());
    CHECK((interpolate(m, 2.0 * v - 3.0 * w) - (2.0 * iv - 3.0 * interpolate(m, w))).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("interpolation stability") {
  std::mt19937_64 rng(6);
  const MeshPair m = unit_mesh(2, 4, 8, {0});
  const Coefficient one = constant_coefficient(m, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const FineFunction v = random_vector(rng, m.num_fine_nodes());
    const FineFunction e = v - prolongate(m, interpolate(m, v));
    for (int t = 0; t < m.num_coarse_cells(); ++t) {
      const Patch p = make_patch(m, t, 1);
      const IVec tc = m.coarse_cell_box().coords(t);
      const Norms local = norms(m, e, one, m.fine_cells_of(tc));
      const double lhs = local.l2 / m.coarse_size()[0] + local.energy;
      const double rhs = norms(m, v, one, p.fine_cells).energy;
      worst = std::max(worst, lhs / rhs);
    }
  }
  CHECK(worst <= 10.0);
}

TEST_CASE("kernel constraints") {
  SUBCASE("no rows when every coarse node is Dirichlet") {
    const MeshPair m = unit_mesh(1, 1, 2, {0});
    const Patch p = make_patch(m, 0, 1);
    const DofPartition part = classify_fine_dofs(m, p);
    const RowSparse c = kernel_constraints(m, interpolation_matrix(m), p, part);
    CHECK(c.rows() == 0);
    CHECK(part.free.size() == 1);
  }
  SUBCASE("rows reproduce I_H and are dual to the coarse basis") {
    std::mt19937_64 rng(8);
    const MeshPair m = unit_mesh(2, 5, 3, {0});
    const RowSparse ih = interpolation_matrix(m);
    for (int t : {0, 7, 12, 24}) {
      const Patch p = make_patch(m, t, 1);
      const DofPartition part = classify_fine_dofs(m, p);
      const RowSparse c = kernel_constraints(m, ih, p, part);
      int expected = 0;
      for_each_index(p.coarse_nodes, [&](const IVec& x) { expected += !m.is_dirichlet_coarse_node(x); });
      CHECK(c.rows() == expected);

      // random patch function, zero on fixed dofs, extended by zero
      const Eigen::VectorXd vf = random_vector(rng, static_cast<int>(part.free.size()));
      FineFunction ext = FineFunction::Zero(m.num_fine_nodes());
      for (size_t i = 0; i < part.free.size(); ++i)
        ext[m.fine_node_box().linear(p.fine_nodes.coords(part.free[i]))] = vf[i];
      const CoarseFunction iv = interpolate(m, ext);
      const Eigen::VectorXd cv = c * vf;
      for (size_t r = 0; r < part.constrained.size(); ++r) {
        const int g = m.coarse_node_box().linear(p.coarse_nodes.coords(part.constrained[r]));
        CHECK(std::abs(cv[r] - iv[g]) < 1e-13);
      }

      // coarse basis functions of interior (non-patch-boundary) nodes
      for (size_t r = 0; r < part.constrained.size(); ++r) {
        const IVec x = p.coarse_nodes.coords(part.constrained[r]);
        CoarseFunction phi = CoarseFunction::Zero(m.num_coarse_nodes());
        phi[m.coarse_node_box().linear(x)] = 1.0;
        const FineFunction fine = prolongate(m, phi);
        Eigen::VectorXd local(part.free.size());
        bool inside = true;
        for (int i : part.fixed)
          if (fine[m.fine_node_box().linear(p.fine_nodes.coords(i))] != 0.0)
            inside = false;
        if (!inside)
          continue;
        for (size_t i = 0; i < part.free.size(); ++i)
          local[i] = fine[m.fine_node_box().linear(p.fine_nodes.coords(part.free[i]))];
        const Eigen::VectorXd row = c * local;
        for (int s = 0; s < row.size(); ++s)
          CHECK(std::abs(row[s] - (s == static_cast<int>(r) ? 1.0 : 0.0)) < 1e-13);
      }
    }
  }
}
