#pragma once

#include "lodadapt/fem.hpp"
#include "lodadapt/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace testing {

using namespace lodadapt;

inline MeshPair unit_mesh(int dim, int coarse, int refine, std::vector<int> dirichlet_axes = {0}) {
  return build_mesh_pair(dim, std::vector<std::pair<double, double>>(dim, {0.0, 1.0}),
                         std::vector<int>(dim, coarse), std::vector<int>(dim, refine),
                         dirichlet_axes);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = u(rng);
  return v;
}

/// Coefficient with values 10^c, c uniform in [log10 lo, log10 hi].
inline Coefficient random_coefficient(std::mt19937_64& rng, const MeshPair& mesh, double lo = 0.01,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(std::log10(lo), std::log10(hi));
  std::vector<double> v(mesh.num_fine_cells());
  for (double& x : v)
    x = std::pow(10.0, u(rng));
  return Coefficient(mesh.fine_cell_box(), v);
}

inline Coefficient constant_coefficient(const MeshPair& mesh, double value) {
  return Coefficient(mesh.fine_cell_box(), std::vector<double>(mesh.num_fine_cells(), value));
}

/// Zero a fine function on the Dirichlet nodes.
inline void zero_dirichlet(const MeshPair& mesh, Eigen::VectorXd& v) {
  const IndexBox nodes = mesh.fine_node_box();
  for_each_index(nodes, [&](const IVec& n) {
    if (mesh.is_dirichlet_fine_node(n))
      v[nodes.linear(n)] = 0.0;
  });
}

/// Gauss points and weights on [0, 1].
inline std::vector<std::pair<double, double>> gauss_01(int points) {
  if (points == 2) {
    const double s = 0.5 / std::sqrt(3.0);
    return {{0.5 - s, 0.5}, {0.5 + s, 0.5}};
  }
  // 4-point rule
  const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
  const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
  const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
  return {{0.5 - 0.5 * b, 0.5 * wb}, {0.5 - 0.5 * a, 0.5 * wa}, {0.5 + 0.5 * a, 0.5 * wa},
          {0.5 + 0.5 * b, 0.5 * wb}};
}

/// Quadrature oracle: ∫ a |∇v|² and ∫ v² for a fine nodal function, evaluating
/// the Q1 gradient at tensor Gauss points of every fine cell.
struct QuadratureNorms {
  double energy2 = 0.0;
  double l2sq = 0.0;
};

inline QuadratureNorms quadrature_norms(const MeshPair& mesh, const Eigen::VectorXd& v,
                                        const Coefficient& a, int points = 2) {
  const int d = mesh.dim();
  const auto g = gauss_01(points);
  const IndexBox nodes = mesh.fine_node_box();
  const DVec h = mesh.fine_size();
  QuadratureNorms out;
  for_each_index(mesh.fine_cell_box(), [&](const IVec& c) {
    IVec qi{0, 0, 0};
    IVec qn{1, 1, 1};
    for (int ax = 0; ax < d; ++ax)
      qn[ax] = points;
    for (qi[2] = 0; qi[2] < qn[2]; ++qi[2])
      for (qi[1] = 0; qi[1] < qn[1]; ++qi[1])
        for (qi[0] = 0; qi[0] < qn[0]; ++qi[0]) {
          double w = 1.0;
          DVec t{0, 0, 0};
          for (int ax = 0; ax < d; ++ax) {
            t[ax] = g[qi[ax]].first;
            w *= g[qi[ax]].second * h[ax];
          }
          double val = 0.0;
          DVec grad{0, 0, 0};
          for (int corner = 0; corner < (1 << d); ++corner) {
            const IVec o = corner_offset(corner);
            const double nv = v[nodes.linear({c[0] + o[0], c[1] + o[1], c[2] + o[2]})];
            double basis = 1.0;
            for (int ax = 0; ax < d; ++ax)
              basis *= o[ax] ? t[ax] : 1.0 - t[ax];
            val += nv * basis;
            for (int ax = 0; ax < d; ++ax) {
              double db = (o[ax] ? 1.0 : -1.0) / h[ax];
              for (int b = 0; b < d; ++b)
                if (b != ax)
                  db *= o[b] ? t[b] : 1.0 - t[b];
              grad[ax] += nv * db;
            }
          }
          double g2 = 0.0;
          for (int ax = 0; ax < d; ++ax)
            g2 += grad[ax] * grad[ax];
          out.energy2 += w * a.at(c) * g2;
          out.l2sq += w * val * val;
        }
  });
  return out;
}

} // namespace testing
