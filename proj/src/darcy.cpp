#include "lodadapt/darcy.hpp"

#include "lodadapt/error.hpp"
#include "lodadapt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace lodadapt {

Mobility mobility(double s) {
  s = std::clamp(s, 0.0, 1.0);
  Mobility m;
  m.wetting = s * s * s;
  m.nonwetting = (1.0 - s) * (1.0 - s) * (1.0 - s);
  m.total = m.wetting + m.nonwetting;
  m.fractional = m.wetting / m.total;
  return m;
}

Coefficient darcy_coefficient(const MeshPair& mesh, const Coefficient& permeability, const Saturation& s) {
  if (s.size() != mesh.num_coarse_cells())
    throw ConfigError("saturation has " + std::to_string(s.size()) + " values, expected " +
                      std::to_string(mesh.num_coarse_cells()));
  const IndexBox cells = mesh.fine_cell_box();
  const IndexBox coarse = mesh.coarse_cell_box();
  std::vector<double> v(cells.size());
  for_each_index(cells, [&](const IVec& c) {
    v[cells.linear(c)] = mobility(s[coarse.linear(mesh.coarse_cell_of(c))]).total * permeability.at(c);
  });
  return Coefficient(cells, std::move(v));
}

namespace {

// Calls fn(inside_cell, outside_cell, boundary, scale) for the fine face
// segments of local face 2a+s of a coarse cell; scale = area / h_a, so the
// integrated normal derivative of a Q1 function over the segment is
// scale * (mean edge difference of the inside cell along a).
template <class Fn>
void for_each_segment(const MeshPair& mesh, const IVec& coarse_cell, int local_face, Fn&& fn) {
  const int axis = local_face / 2;
  const int side = local_face % 2;
  IndexBox box = mesh.fine_cells_of(coarse_cell);
  if (side == 0)
    box.hi[axis] = box.lo[axis] + 1;
  else
    box.lo[axis] = box.hi[axis] - 1;
  double scale = 1.0 / mesh.fine_size()[axis];
  for (int b = 0; b < mesh.dim(); ++b)
    if (b != axis)
      scale *= mesh.fine_size()[b];
  const int limit = mesh.fine_cells()[axis];
  for_each_index(box, [&](const IVec& c) {
    IVec out = c;
    out[axis] += side ? 1 : -1;
    fn(c, out, out[axis] < 0 || out[axis] >= limit, scale);
  });
}

// Corner pairs (lower, upper) along an axis.
struct EdgePairs {
  int count = 0;
  std::array<std::pair<int, int>, 4> pairs{};

  EdgePairs(int dim, int axis) {
    for (int c = 0; c < (1 << dim); ++c)
      if (!(c & (1 << axis)))
        pairs[count++] = {c, c | (1 << axis)};
  }
};

double face_average(const Coefficient& a, const IVec& in, const IVec& out, bool boundary) {
  const double ai = a.at(in);
  return boundary ? 2.0 * ai : harmonic_mean(ai, a.at(out));
}

} // namespace

FluxTable flux_table(const LodContext& ctx, const CorrectorSet& cs, const Coefficient& a) {
  const MeshPair& mesh = ctx.mesh();
  const FaceSet& faces = ctx.faces();
  const IndexBox coarse = mesh.coarse_cell_box();
  const CornerOffsets co(mesh.dim(), cs.patch.fine_nodes);
  const CornerOffsets cc(mesh.dim(), cs.center_nodes);
  const int m = cs.m;
  FluxTable table;
  table.element = cs.element;

  std::map<int, int> row_of;
  std::vector<Eigen::VectorXd> rows;
  double buf[8 * 10];
  for_each_index(cs.patch.coarse_cells, [&](const IVec& t) {
    const int tp = coarse.linear(t);
    for (int lf = 0; lf < faces.local_faces(); ++lf) {
      const int face = faces.face_of(tp, lf);
      auto [it, fresh] = row_of.try_emplace(face, static_cast<int>(rows.size()));
      if (fresh)
        rows.push_back(Eigen::VectorXd::Zero(m + 2));
      Eigen::VectorXd& row = rows[it->second];
      const EdgePairs edges(mesh.dim(), lf / 2);
      for_each_segment(mesh, t, lf, [&](const IVec& in, const IVec& out, bool boundary, double scale) {
        cs.cell_values(co, in, buf);
        const double w = -face_average(a, in, out, boundary) * scale / edges.count;
        for (int col = 0; col <= m + 1; ++col) {
          double d = 0.0;
          for (int e = 0; e < edges.count; ++e)
            d += buf[col * 8 + edges.pairs[e].second] - buf[col * 8 + edges.pairs[e].first];
          row[std::min(col, m)] += w * d;
        }
        if (cs.center_cells.contains(in)) {
          // Split χ_T g off column m so it can be swapped for the true-coefficient flux.
          const int base = cs.center_nodes.linear(in);
          double d = 0.0;
          for (int e = 0; e < edges.count; ++e)
            d += cs.chi(base + cc.offset[edges.pairs[e].second], m) - cs.chi(base + cc.offset[edges.pairs[e].first], m);
          row[m] -= w * d;
          row[m + 1] += w * d;
        }
      });
    }
  });

  table.faces.reserve(row_of.size());
  table.values.resize(static_cast<Eigen::Index>(row_of.size()), m + 2);
  int r = 0;
  for (const auto& [face, index] : row_of) {
    table.faces.push_back(face);
    table.values.row(r++) = rows[index].transpose();
  }
  return table;
}

FluxField preflux(const LodContext& ctx, const CoarseFunction& alpha, const std::vector<const FluxTable*>& tables,
                  const Coefficient* a) {
  const int elements = ctx.mesh().num_coarse_cells();
  if (static_cast<int>(tables.size()) != elements)
    throw StateError("flux tables for " + std::to_string(tables.size()) + " elements, expected " +
                     std::to_string(elements));
  FluxField sigma = FluxField::Zero(ctx.faces().size());
  for (int e = 0; e < elements; ++e) {
    const FluxTable* t = tables[e];
    if (!t)
      throw StateError("flux table of element " + std::to_string(e) + " is missing");
    const auto nodes = ctx.element_nodes(e);
    const int m = ctx.mesh().corners();
    Eigen::VectorXd coef(m + 2);
    for (int i = 0; i < m; ++i)
      coef[i] = alpha[nodes[i]];
    coef[m] = 1.0;
    coef[m + 1] = a ? 0.0 : 1.0;
    const Eigen::VectorXd contrib = t->values * coef;
    for (size_t r = 0; r < t->faces.size(); ++r)
      sigma[t->faces[r]] += 0.5 * contrib[static_cast<Eigen::Index>(r)];
  }
  if (a)
    sigma += fine_preflux(ctx.mesh(), ctx.faces(), *a, ctx.g());
  return sigma;
}

FluxField fine_preflux(const MeshPair& mesh, const FaceSet& faces, const Coefficient& a, const FineFunction& w) {
  const IndexBox coarse = mesh.coarse_cell_box();
  const IndexBox nodes = mesh.fine_node_box();
  const CornerOffsets co(mesh.dim(), nodes);
  FluxField sigma = FluxField::Zero(faces.size());
  for_each_index(coarse, [&](const IVec& t) {
    const int e = coarse.linear(t);
    for (int lf = 0; lf < faces.local_faces(); ++lf) {
      const EdgePairs edges(mesh.dim(), lf / 2);
      double sum = 0.0;
      for_each_segment(mesh, t, lf, [&](const IVec& in, const IVec& out, bool boundary, double scale) {
        const int base = nodes.linear(in);
        double d = 0.0;
        for (int k = 0; k < edges.count; ++k)
          d += w[base + co.offset[edges.pairs[k].second]] - w[base + co.offset[edges.pairs[k].first]];
        sum -= face_average(a, in, out, boundary) * scale * d / edges.count;
      });
      sigma[faces.face_of(e, lf)] += 0.5 * sum;
    }
  });
  return sigma;
}

Eigen::VectorXd element_sources(const MeshPair& mesh, const LocalMatrices& lm, const Source& f) {
  const IndexBox coarse = mesh.coarse_cell_box();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(coarse.size());
  if (f.is_zero())
    return b;
  const double vol = mesh.fine_cell_volume();
  const IndexBox nodes = mesh.fine_node_box();
  const CornerOffsets co(mesh.dim(), nodes);
  const IndexBox cells = mesh.fine_cell_box();
  for_each_index(cells, [&](const IVec& c) {
    double v = 0.0;
    if (f.kind == Source::Kind::cellwise)
      v = f.values[cells.linear(c)];
    else {
      // Mean of the corner values integrates a multilinear function exactly.
      const int base = nodes.linear(c);
      for (int i = 0; i < lm.n; ++i)
        v += f.values[base + co.offset[i]];
      v /= lm.n;
    }
    b[coarse.linear(mesh.coarse_cell_of(c))] += vol * v;
  });
  return b;
}

Eigen::VectorXd conservation_residual(const MeshPair& mesh, const FaceSet& faces, const FluxField& sigma,
                                      const Eigen::VectorXd& sources) {
  const int n = mesh.num_coarse_cells();
  Eigen::VectorXd r = -sources;
  for (int e = 0; e < n; ++e)
    for (int lf = 0; lf < faces.local_faces(); ++lf)
      r[e] += FaceSet::orientation(lf) * sigma[faces.face_of(e, lf)];
  return r;
}

FluxField conservative_flux(const MeshPair& mesh, const FaceSet& faces, const FluxField& preflux,
                            const Eigen::VectorXd& sources) {
  const int n = mesh.num_coarse_cells();
  if (preflux.size() != faces.size() || sources.size() != n)
    throw StateError("flux or source field has the wrong size");
  FluxField sigma = preflux;
  bool any_dirichlet = false;
  for (int i = 0; i < faces.size(); ++i) {
    if (faces[i].kind == FaceKind::neumann)
      sigma[i] = 0.0;
    any_dirichlet = any_dirichlet || faces[i].kind == FaceKind::dirichlet;
  }
  if (!any_dirichlet) {
    const double total = sources.sum();
    if (std::abs(total) > 1e-12 * std::max(1.0, sources.cwiseAbs().sum()))
      throw ConfigError("conservative flux is infeasible: no Dirichlet face and total source " +
                        std::to_string(total));
  }

  // D Dᵀ over the non-Neumann faces: the element graph Laplacian plus one per
  // Dirichlet face on the diagonal.
  std::vector<Eigen::Triplet<double>> trip;
  for (const Face& f : faces.faces()) {
    if (f.kind == FaceKind::interior) {
      trip.emplace_back(f.lower, f.lower, 1.0);
      trip.emplace_back(f.upper, f.upper, 1.0);
      trip.emplace_back(f.lower, f.upper, -1.0);
      trip.emplace_back(f.upper, f.lower, -1.0);
    } else if (f.kind == FaceKind::dirichlet) {
      const int e = f.lower >= 0 ? f.lower : f.upper;
      trip.emplace_back(e, e, 1.0);
    }
  }
  // Without Dirichlet faces y is fixed by y_0 = 0: the extra diagonal entry
  // forces it since the right-hand side sums to zero.
  if (!any_dirichlet)
    trip.emplace_back(0, 0, 1.0);
  SparseMatrix ddt(n, n);
  ddt.setFromTriplets(trip.begin(), trip.end());
  const SparseCholesky chol(ddt);

  const auto apply_dt = [&](const Eigen::VectorXd& y, FluxField& s) {
    for (int i = 0; i < faces.size(); ++i) {
      const Face& f = faces[i];
      if (f.kind == FaceKind::neumann)
        continue;
      // θ_{lower,F} = +1, θ_{upper,F} = −1.
      double v = 0.0;
      if (f.lower >= 0)
        v += y[f.lower];
      if (f.upper >= 0)
        v -= y[f.upper];
      s[i] -= v;
    }
  };
  // One step of refinement keeps the residual at rounding level.
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd r = conservation_residual(mesh, faces, sigma, sources);
    if (!any_dirichlet)
      r.array() -= r.mean();
    apply_dt(chol.solve(r), sigma);
  }
  return sigma;
}

TransportResult transport_step(const MeshPair& mesh, const FaceSet& faces, const Saturation& s,
                               const FluxField& sigma, double dt, const BoundarySaturation& s_boundary) {
  if (dt <= 0.0)
    throw ConfigError("time step must be positive");
  const double vol = mesh.coarse_cell_volume();
  TransportResult out;
  out.s = s;
  Eigen::VectorXd change = Eigen::VectorXd::Zero(s.size());
  for (int i = 0; i < faces.size(); ++i) {
    const Face& f = faces[i];
    const double q = sigma[i];
    if (f.kind == FaceKind::interior) {
      const double up = q >= 0.0 ? s[f.lower] : s[f.upper];
      const double flow = mobility(up).fractional * q;
      change[f.lower] -= flow;
      change[f.upper] += flow;
      out.scale += dt * std::abs(flow);
      continue;
    }
    const int e = f.lower >= 0 ? f.lower : f.upper;
    const int side = f.lower >= 0 ? 1 : 0;
    const double outward = side == 1 ? q : -q;
    const double sb = outward > 0.0 ? s[e] : s_boundary[f.axis][side];
    const double flow = mobility(sb).fractional * outward;
    change[e] -= flow;
    out.boundary_flux -= dt * flow;
    out.scale += dt * std::abs(flow);
  }
  for (int e = 0; e < s.size(); ++e)
    out.s[e] += dt / vol * change[e];
  out.mass_change = vol * (out.s - s).sum();
  out.min = out.s.minCoeff();
  out.max = out.s.maxCoeff();
  return out;
}

} // namespace lodadapt
