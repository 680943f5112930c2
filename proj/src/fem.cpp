#include "lodadapt/fem.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lodadapt {

Coefficient::Coefficient(IndexBox cells, std::vector<double> values)
    : box_(cells), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != box_.size())
    throw ConfigError("coefficient has " + std::to_string(values_.size()) + " values for " +
                      std::to_string(box_.size()) + " cells");
  if (values_.empty())
    return;
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
  if (!(min_ > 0.0) || !std::isfinite(max_))
    throw ConfigError("coefficient values must be positive and finite (min " + std::to_string(min_) +
                      ", max " + std::to_string(max_) + ")");
}

Coefficient Coefficient::restrict(const IndexBox& cells) const {
  std::vector<double> out;
  out.reserve(cells.size());
  for_each_index(cells, [&](const IVec& c) { out.push_back(at(c)); });
  return Coefficient(cells, std::move(out));
}

Coefficient Coefficient::scaled(double factor) const {
  std::vector<double> out = values_;
  for (double& v : out)
    v *= factor;
  return Coefficient(box_, std::move(out));
}

namespace {

std::array<std::array<double, 2>, 2> stiffness_1d(double h) {
  return {{{1.0 / h, -1.0 / h}, {-1.0 / h, 1.0 / h}}};
}

std::array<std::array<double, 2>, 2> mass_1d(double h) {
  return {{{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}}};
}

} // namespace

Eigen::MatrixXd element_stiffness(int dim, const DVec& h, double a) {
  const int n = 1 << dim;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int axis = 0; axis < dim; ++axis) {
        double v = 1.0;
        for (int b = 0; b < dim; ++b) {
          const int ib = (i >> b) & 1, jb = (j >> b) & 1;
          v *= (b == axis) ? stiffness_1d(h[b])[ib][jb] : mass_1d(h[b])[ib][jb];
        }
        k(i, j) += a * v;
      }
  return k;
}

Eigen::MatrixXd element_mass(int dim, const DVec& h) {
  const int n = 1 << dim;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 1.0;
      for (int b = 0; b < dim; ++b)
        v *= mass_1d(h[b])[(i >> b) & 1][(j >> b) & 1];
      m(i, j) = v;
    }
  return m;
}

LocalMatrices::LocalMatrices(const MeshPair& mesh) : n(mesh.corners()) {
  const Eigen::MatrixXd k = element_stiffness(mesh.dim(), mesh.fine_size(), 1.0);
  const Eigen::MatrixXd m = element_mass(mesh.dim(), mesh.fine_size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      stiffness[i * 8 + j] = k(i, j);
      mass[i * 8 + j] = m(i, j);
    }
}

CornerOffsets::CornerOffsets(int dim, const IndexBox& nodes) : n(1 << dim) {
  const int stride[3] = {1, nodes.extent(0), nodes.extent(0) * nodes.extent(1)};
  for (int c = 0; c < n; ++c) {
    const IVec o = corner_offset(c);
    offset[c] = o[0] * stride[0] + o[1] * stride[1] + o[2] * stride[2];
  }
}

void add_source_load(const MeshPair& mesh, const LocalMatrices& lm, const IndexBox& cells,
                     const IndexBox& nodes, const Source& f, double* y) {
  if (f.is_zero())
    return;
  const CornerOffsets co(mesh.dim(), nodes);
  const int n = lm.n;
  if (f.kind == Source::Kind::cellwise) {
    const IndexBox all = mesh.fine_cell_box();
    const double share = mesh.fine_cell_volume() / n;
    for_each_index(cells, [&](const IVec& c) {
      const double w = f.values[all.linear(c)] * share;
      const int base = nodes.linear(c);
      for (int i = 0; i < n; ++i)
        y[base + co.offset[i]] += w;
    });
    return;
  }
  const IndexBox all = mesh.fine_node_box();
  const CornerOffsets gco(mesh.dim(), all);
  for_each_index(cells, [&](const IVec& c) {
    const int base = nodes.linear(c);
    const int gbase = all.linear(c);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        s += lm.mass[i * 8 + j] * f.values[gbase + gco.offset[j]];
      y[base + co.offset[i]] += s;
    }
  });
}

SparseMatrix assemble_stiffness(const MeshPair& mesh, const IndexBox& cells, const IndexBox& nodes,
                                const Coefficient& a, const std::vector<int>& free_index) {
  const int nfree = static_cast<int>(std::count_if(free_index.begin(), free_index.end(),
                                                   [](int i) { return i >= 0; }));
  if (nfree == 0)
    throw ConfigError("stiffness assembly over an empty free set");
  const LocalMatrices lm(mesh);
  const CornerOffsets co(mesh.dim(), nodes);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(cells.size()) * lm.n * lm.n);
  for_each_index(cells, [&](const IVec& c) {
    const int base = nodes.linear(c);
    const double w = a.at(c);
    for (int i = 0; i < lm.n; ++i) {
      const int fi = free_index[base + co.offset[i]];
      if (fi < 0)
        continue;
      for (int j = 0; j < lm.n; ++j) {
        const int fj = free_index[base + co.offset[j]];
        if (fj >= 0)
          trips.emplace_back(fi, fj, w * lm.stiffness[i * 8 + j]);
      }
    }
  });
  SparseMatrix k(nfree, nfree);
  k.setFromTriplets(trips.begin(), trips.end());
  return k;
}

FineFunction solve_fine_reference(const MeshPair& mesh, const Coefficient& a, const Source& f,
                                  const FineFunction& g) {
  if (!mesh.has_dirichlet())
    throw SolverError("fine reference problem is singular without a Dirichlet boundary");
  const IndexBox cells = mesh.fine_cell_box();
  const IndexBox nodes = mesh.fine_node_box();
  if (g.size() != nodes.size())
    throw ConfigError("boundary function has wrong length");
  std::vector<int> free_index(nodes.size(), -1);
  std::vector<int> free;
  for_each_index(nodes, [&](const IVec& n) {
    if (!mesh.is_dirichlet_fine_node(n)) {
      free_index[nodes.linear(n)] = static_cast<int>(free.size());
      free.push_back(nodes.linear(n));
    }
  });
  const LocalMatrices lm(mesh);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(nodes.size());
  add_source_load(mesh, lm, cells, nodes, f, load.data());
  Eigen::VectorXd ag = Eigen::VectorXd::Zero(nodes.size());
  apply_weighted_stiffness(mesh, lm, cells, nodes, [&](const IVec& c) { return a.at(c); }, g.data(),
                           ag.data());
  Eigen::VectorXd rhs(free.size());
  for (size_t i = 0; i < free.size(); ++i)
    rhs[i] = load[free[i]] - ag[free[i]];

  const SparseCholesky chol(assemble_stiffness(mesh, cells, nodes, a, free_index));
  const Eigen::VectorXd x = chol.solve(rhs);
  FineFunction u = FineFunction::Zero(nodes.size());
  for (size_t i = 0; i < free.size(); ++i)
    u[free[i]] = x[i];
  return u;
}

Norms norms(const MeshPair& mesh, const FineFunction& v, const Coefficient& a, const IndexBox& cells) {
  const LocalMatrices lm(mesh);
  const IndexBox nodes = mesh.fine_node_box();
  const CornerOffsets co(mesh.dim(), nodes);
  double e2 = 0.0, l2 = 0.0;
  for_each_index(cells, [&](const IVec& c) {
    const int base = nodes.linear(c);
    double xl[8];
    for (int i = 0; i < lm.n; ++i)
      xl[i] = v[base + co.offset[i]];
    double se = 0.0, sl = 0.0;
    for (int i = 0; i < lm.n; ++i)
      for (int j = 0; j < lm.n; ++j) {
        se += xl[i] * lm.stiffness[i * 8 + j] * xl[j];
        sl += xl[i] * lm.mass[i * 8 + j] * xl[j];
      }
    e2 += a.at(c) * se;
    l2 += sl;
  });
  return {std::sqrt(std::max(e2, 0.0)), std::sqrt(std::max(l2, 0.0))};
}

Norms norms(const MeshPair& mesh, const FineFunction& v, const Coefficient& a) {
  return norms(mesh, v, a, mesh.fine_cell_box());
}

double source_l2_squared(const MeshPair& mesh, const LocalMatrices& lm, const IndexBox& cells,
                         const Source& f) {
  if (f.is_zero())
    return 0.0;
  double s = 0.0;
  if (f.kind == Source::Kind::cellwise) {
    const IndexBox all = mesh.fine_cell_box();
    for_each_index(cells, [&](const IVec& c) {
      const double v = f.values[all.linear(c)];
      s += v * v;
    });
    return s * mesh.fine_cell_volume();
  }
  const IndexBox all = mesh.fine_node_box();
  const CornerOffsets co(mesh.dim(), all);
  for_each_index(cells, [&](const IVec& c) {
    const int base = all.linear(c);
    for (int i = 0; i < lm.n; ++i)
      for (int j = 0; j < lm.n; ++j)
        s += f.values[base + co.offset[i]] * lm.mass[i * 8 + j] * f.values[base + co.offset[j]];
  });
  return s;
}

} // namespace lodadapt
