#include "lodadapt/indicator.hpp"

#include "lodadapt/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lodadapt {

Eigenpair max_generalized_eigenpair(const Eigen::MatrixXd& b, const Eigen::MatrixXd& c, int drop) {
  const int m = static_cast<int>(c.rows());
  std::vector<int> keep;
  for (int i = 0; i < m; ++i)
    if (i != drop)
      keep.push_back(i);
  const int n = static_cast<int>(keep.size());
  Eigen::MatrixXd br(n, n), cr(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      br(i, j) = 0.5 * (b(keep[i], keep[j]) + b(keep[j], keep[i]));
      cr(i, j) = 0.5 * (c(keep[i], keep[j]) + c(keep[j], keep[i]));
    }
  Eigenpair out;
  out.vector = Eigen::VectorXd::Zero(m);
  if (n == 0)
    return out;
  const Eigen::LLT<Eigen::MatrixXd> llt(cr);
  const double cmax = cr.diagonal().cwiseAbs().maxCoeff();
  const double lmin = llt.matrixLLT().diagonal().minCoeff();
  if (llt.info() != Eigen::Success || !(lmin * lmin > 1e-14 * cmax))
    throw SolverError("indicator eigenproblem: element energy matrix is not positive definite "
                      "(max diagonal " + std::to_string(cmax) + ")");
  // L⁻¹ B L⁻ᵀ y = μ y, x = L⁻ᵀ y
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd tmp = l.triangularView<Eigen::Lower>().solve(br);
  Eigen::MatrixXd std_form = l.triangularView<Eigen::Lower>().solve(tmp.transpose());
  std_form = 0.5 * (std_form + std_form.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(std_form);
  const int top = n - 1;
  out.value = std::max(0.0, es.eigenvalues()[top]);
  const Eigen::VectorXd x = l.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors().col(top));
  for (int i = 0; i < n; ++i)
    out.vector[keep[i]] = x[i];
  return out;
}

double FineIndicators::max() const { return std::max({e_u, e_f, e_g}); }

FineIndicators fine_indicators(const LodContext& ctx, const CorrectorSet& cs, const Coefficient& a, int drop) {
  const Coefficient& at = cs.snapshot;
  const Eigen::MatrixXd b = corrected_gram(ctx, cs, cs.patch.fine_cells, [&](const IVec& c) {
    const double d = at.at(c) - a.at(c);
    return d * d / a.at(c);
  });
  const Eigen::MatrixXd c = center_gram(ctx, cs, [&](const IVec& x) { return a.at(x); });
  FineIndicators out;
  out.top = max_generalized_eigenpair(b.topLeftCorner(cs.m, cs.m), c.topLeftCorner(cs.m, cs.m), drop);
  out.e_u = std::sqrt(out.top.value);

  const double f2 = source_l2_squared(ctx.mesh(), ctx.local(), cs.center_cells, ctx.f());
  const double bf = b(cs.col_f(), cs.col_f());
  if (f2 > 0.0 && bf > 0.0)
    out.e_f = std::sqrt(bf / f2);
  const double g2 = c(cs.m, cs.m);
  const double bg = b(cs.col_g(), cs.col_g());
  if (g2 > 0.0 && bg > 0.0)
    out.e_g = std::sqrt(bg / g2);
  return out;
}

MuTable mu_table(const LodContext& ctx, const CorrectorSet& cs) {
  const MeshPair& mesh = ctx.mesh();
  const Coefficient& at = cs.snapshot;
  const int nc = cs.columns();
  const IndexBox coarse = mesh.coarse_cell_box();
  const IndexBox& pc = cs.patch.coarse_cells;
  std::vector<Eigen::MatrixXd> grams(pc.size(), Eigen::MatrixXd::Zero(nc, nc));
  corrected_grams(
      ctx, cs, cs.patch.fine_cells, [&](const IVec& c) { return at.at(c); },
      [&](const IVec& c) { return pc.linear(mesh.coarse_cell_of(c)); }, grams);

  const Eigen::MatrixXd cg = center_gram(ctx, cs, [&](const IVec& x) { return at.at(x); });
  const Eigen::MatrixXd cmat = cg.topLeftCorner(cs.m, cs.m);
  const double f2 = source_l2_squared(mesh, ctx.local(), cs.center_cells, ctx.f());
  const double g2 = cg(cs.m, cs.m);

  MuTable table;
  table.reserve(pc.size());
  for_each_index(pc, [&](const IVec& t) {
    const Eigen::MatrixXd& gram = grams[pc.linear(t)];
    MuRow row;
    row.element = coarse.linear(t);
    row.mu = max_generalized_eigenpair(gram.topLeftCorner(cs.m, cs.m), cmat).value;
    if (f2 > 0.0)
      row.f_ratio = gram(cs.col_f(), cs.col_f()) / f2;
    if (g2 > 0.0)
      row.g_ratio = gram(cs.col_g(), cs.col_g()) / g2;
    table.push_back(row);
  });
  return table;
}

CoarseIndicators coarse_indicators(const MuTable& table, const std::vector<double>& delta2, double rho) {
  if (delta2.size() != table.size())
    throw StateError("coarse indicator: δ values do not match the μ table");
  CoarseIndicators out;
  for (size_t r = 0; r < table.size(); ++r) {
    out.e_u += delta2[r] * rho * table[r].mu;
    out.e_f += delta2[r] * table[r].f_ratio;
    out.e_g += delta2[r] * rho * table[r].g_ratio;
  }
  return out;
}

double delta_squared(const Coefficient& lagging, const Coefficient& a, const IndexBox& cells) {
  double m = 0.0;
  for_each_index(cells, [&](const IVec& c) {
    const double x = lagging.at(c), y = a.at(c);
    const double d = (x - y) / std::sqrt(x * y);
    m = std::max(m, d * d);
  });
  return m;
}

double ratio_sup(const Coefficient& lagging, const Coefficient& a, const IndexBox& cells) {
  double m = 0.0;
  for_each_index(cells, [&](const IVec& c) { m = std::max(m, lagging.at(c) / a.at(c)); });
  return m;
}

double mobility_delta(double lagging, double current) {
  return (lagging - current) / std::sqrt(lagging * current);
}

} // namespace lodadapt
