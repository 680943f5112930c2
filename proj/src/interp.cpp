#include "lodadapt/interp.hpp"

#include "lodadapt/error.hpp"

#include <vector>

namespace lodadapt {

namespace {

// 1D projection of the r+1 fine hat functions of [0, H] onto the two linear
// functions: M_H^{-1} B with B[a][m] = (φ_a, ψ_m).
Eigen::Matrix<double, 2, Eigen::Dynamic> stencil_1d(int r, double big_h) {
  const double h = big_h / r;
  Eigen::MatrixXd mf = Eigen::MatrixXd::Zero(r + 1, r + 1);
  for (int e = 0; e < r; ++e) {
    mf(e, e) += h / 3.0;
    mf(e + 1, e + 1) += h / 3.0;
    mf(e, e + 1) += h / 6.0;
    mf(e + 1, e) += h / 6.0;
  }
  Eigen::Matrix<double, 2, Eigen::Dynamic> phi(2, r + 1);
  for (int m = 0; m <= r; ++m) {
    phi(1, m) = static_cast<double>(m) / r;
    phi(0, m) = 1.0 - phi(1, m);
  }
  const Eigen::Matrix<double, 2, Eigen::Dynamic> b = phi * mf;
  Eigen::Matrix2d minv;
  minv << 4.0, -2.0, -2.0, 4.0;
  minv /= big_h;
  return minv * b;
}

IndexBox cell_node_box(const MeshPair& mesh) {
  IndexBox b;
  for (int a = 0; a < mesh.dim(); ++a)
    b.hi[a] = mesh.refinement()[a] + 1;
  return b;
}

int adjacent_cell_count(const MeshPair& mesh, const IVec& node) {
  int card = 1;
  for (int a = 0; a < mesh.dim(); ++a)
    if (node[a] > 0 && node[a] < mesh.coarse_cells()[a])
      card *= 2;
  return card;
}

} // namespace

Eigen::MatrixXd projection_stencil(const MeshPair& mesh) {
  const int d = mesh.dim();
  Eigen::Matrix<double, 2, Eigen::Dynamic> w1[kMaxDim];
  for (int a = 0; a < d; ++a)
    w1[a] = stencil_1d(mesh.refinement()[a], mesh.coarse_size()[a]);
  const IndexBox local = cell_node_box(mesh);
  Eigen::MatrixXd w(mesh.corners(), local.size());
  for (int c = 0; c < mesh.corners(); ++c) {
    const IVec co = corner_offset(c);
    for_each_index(local, [&](const IVec& m) {
      double v = 1.0;
      for (int a = 0; a < d; ++a)
        v *= w1[a](co[a], m[a]);
      w(c, local.linear(m)) = v;
    });
  }
  return w;
}

BrokenCoarse project_broken(const MeshPair& mesh, const FineFunction& v) {
  const IndexBox fine = mesh.fine_node_box();
  if (v.size() != fine.size())
    throw ConfigError("fine function has wrong length");
  const Eigen::MatrixXd w = projection_stencil(mesh);
  const IndexBox local = cell_node_box(mesh);
  const IndexBox cells = mesh.coarse_cell_box();
  BrokenCoarse out{Eigen::MatrixXd(mesh.corners(), cells.size())};
  Eigen::VectorXd vl(local.size());
  for_each_index(cells, [&](const IVec& t) {
    IVec base{0, 0, 0};
    for (int a = 0; a < mesh.dim(); ++a)
      base[a] = t[a] * mesh.refinement()[a];
    for_each_index(local, [&](const IVec& m) {
      vl[local.linear(m)] = v[fine.linear({base[0] + m[0], base[1] + m[1], base[2] + m[2]})];
    });
    out.values.col(cells.linear(t)) = w * vl;
  });
  return out;
}

CoarseFunction node_average(const MeshPair& mesh, const BrokenCoarse& b) {
  const IndexBox nodes = mesh.coarse_node_box();
  const IndexBox cells = mesh.coarse_cell_box();
  CoarseFunction out = CoarseFunction::Zero(nodes.size());
  for_each_index(nodes, [&](const IVec& x) {
    if (mesh.is_dirichlet_coarse_node(x))
      return;
    double sum = 0.0;
    int card = 0;
    for (int c = 0; c < mesh.corners(); ++c) {
      const IVec o = corner_offset(c);
      const IVec t{x[0] - o[0], x[1] - o[1], x[2] - o[2]};
      if (!cells.contains(t))
        continue;
      sum += b.values(c, cells.linear(t));
      ++card;
    }
    out[nodes.linear(x)] = sum / card;
  });
  return out;
}

CoarseFunction interpolate(const MeshPair& mesh, const FineFunction& v) {
  return node_average(mesh, project_broken(mesh, v));
}

RowSparse interpolation_matrix(const MeshPair& mesh) {
  const Eigen::MatrixXd w = projection_stencil(mesh);
  const IndexBox local = cell_node_box(mesh);
  const IndexBox nodes = mesh.coarse_node_box();
  const IndexBox cells = mesh.coarse_cell_box();
  const IndexBox fine = mesh.fine_node_box();
  std::vector<Eigen::Triplet<double>> trips;
  for_each_index(nodes, [&](const IVec& x) {
    if (mesh.is_dirichlet_coarse_node(x))
      return;
    const int row = nodes.linear(x);
    const double inv_card = 1.0 / adjacent_cell_count(mesh, x);
    for (int c = 0; c < mesh.corners(); ++c) {
      const IVec o = corner_offset(c);
      const IVec t{x[0] - o[0], x[1] - o[1], x[2] - o[2]};
      if (!cells.contains(t))
        continue;
      IVec base{0, 0, 0};
      for (int a = 0; a < mesh.dim(); ++a)
        base[a] = t[a] * mesh.refinement()[a];
      for_each_index(local, [&](const IVec& m) {
        const int col = fine.linear({base[0] + m[0], base[1] + m[1], base[2] + m[2]});
        trips.emplace_back(row, col, inv_card * w(c, local.linear(m)));
      });
    }
  });
  RowSparse m(nodes.size(), fine.size());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::MatrixXd prolongate(const MeshPair& mesh, const IndexBox& coarse_nodes,
                           const IndexBox& fine_nodes, const Eigen::MatrixXd& coarse) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(fine_nodes.size(), coarse.cols());
  for_each_index(fine_nodes, [&](const IVec& n) {
    const int row = fine_nodes.linear(n);
    for_each_prolongation_weight(mesh, n, [&](const IVec& x, double w) {
      out.row(row) += w * coarse.row(coarse_nodes.linear(x));
    });
  });
  return out;
}

FineFunction prolongate(const MeshPair& mesh, const CoarseFunction& coarse) {
  return prolongate(mesh, mesh.coarse_node_box(), mesh.fine_node_box(), coarse);
}

Eigen::MatrixXd restrict_adjoint(const MeshPair& mesh, const IndexBox& coarse_nodes,
                                 const IndexBox& fine_nodes, const Eigen::MatrixXd& fine) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coarse_nodes.size(), fine.cols());
  for_each_index(fine_nodes, [&](const IVec& n) {
    const int row = fine_nodes.linear(n);
    for_each_prolongation_weight(mesh, n, [&](const IVec& x, double w) {
      out.row(coarse_nodes.linear(x)) += w * fine.row(row);
    });
  });
  return out;
}

RowSparse kernel_constraints(const MeshPair& mesh, const RowSparse& interp, const Patch& patch,
                             const DofPartition& part) {
  const IndexBox coarse = mesh.coarse_node_box();
  const IndexBox fine = mesh.fine_node_box();
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t r = 0; r < part.constrained.size(); ++r) {
    const int global = coarse.linear(patch.coarse_nodes.coords(part.constrained[r]));
    for (RowSparse::InnerIterator it(interp, global); it; ++it) {
      const IVec n = fine.coords(static_cast<int>(it.col()));
      if (!patch.fine_nodes.contains(n))
        continue;
      const int col = part.free_index[patch.fine_nodes.linear(n)];
      if (col >= 0)
        trips.emplace_back(static_cast<int>(r), col, it.value());
    }
  }
  RowSparse c(static_cast<int>(part.constrained.size()), static_cast<int>(part.free.size()));
  c.setFromTriplets(trips.begin(), trips.end());
  return c;
}

} // namespace lodadapt
