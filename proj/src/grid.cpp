#include "lodadapt/grid.hpp"

#include "lodadapt/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lodadapt {

MeshPair::MeshPair(int dim, std::vector<std::pair<double, double>> domain,
                   std::vector<int> coarse_cells, std::vector<int> refinement,
                   std::vector<std::array<bool, 2>> dirichlet_sides)
    : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw ConfigError("mesh dimension must be 1, 2 or 3, got " + std::to_string(dim));
  if (static_cast<int>(domain.size()) != dim || static_cast<int>(coarse_cells.size()) != dim ||
      static_cast<int>(refinement.size()) != dim || static_cast<int>(dirichlet_sides.size()) != dim)
    throw ConfigError("mesh specification has inconsistent axis counts");
  for (int a = 0; a < dim; ++a) {
    const auto [lo, hi] = domain[a];
    if (!(std::isfinite(lo) && std::isfinite(hi) && hi > lo))
      throw ConfigError("degenerate domain extent on axis " + std::to_string(a));
    if (coarse_cells[a] < 1 || refinement[a] < 1)
      throw ConfigError("cell counts and refinement must be >= 1 on axis " + std::to_string(a));
    coarse_[a] = coarse_cells[a];
    refine_[a] = refinement[a];
    fine_[a] = coarse_cells[a] * refinement[a];
    lower_[a] = lo;
    upper_[a] = hi;
    coarse_h_[a] = (hi - lo) / coarse_[a];
    fine_h_[a] = (hi - lo) / fine_[a];
    dirichlet_[a] = dirichlet_sides[a];
  }
}

IndexBox MeshPair::coarse_cell_box() const {
  IndexBox b;
  for (int a = 0; a < dim_; ++a)
    b.hi[a] = coarse_[a];
  return b;
}

IndexBox MeshPair::coarse_node_box() const {
  IndexBox b;
  for (int a = 0; a < dim_; ++a)
    b.hi[a] = coarse_[a] + 1;
  return b;
}

IndexBox MeshPair::fine_cell_box() const {
  IndexBox b;
  for (int a = 0; a < dim_; ++a)
    b.hi[a] = fine_[a];
  return b;
}

IndexBox MeshPair::fine_node_box() const {
  IndexBox b;
  for (int a = 0; a < dim_; ++a)
    b.hi[a] = fine_[a] + 1;
  return b;
}

double MeshPair::coarse_cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a)
    v *= coarse_h_[a];
  return v;
}

double MeshPair::fine_cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a)
    v *= fine_h_[a];
  return v;
}

bool MeshPair::has_dirichlet() const {
  for (int a = 0; a < dim_; ++a)
    if (dirichlet_[a][0] || dirichlet_[a][1])
      return true;
  return false;
}

bool MeshPair::is_dirichlet_fine_node(const IVec& node) const {
  for (int a = 0; a < dim_; ++a) {
    if (node[a] == 0 && dirichlet_[a][0])
      return true;
    if (node[a] == fine_[a] && dirichlet_[a][1])
      return true;
  }
  return false;
}

bool MeshPair::is_dirichlet_coarse_node(const IVec& node) const {
  for (int a = 0; a < dim_; ++a) {
    if (node[a] == 0 && dirichlet_[a][0])
      return true;
    if (node[a] == coarse_[a] && dirichlet_[a][1])
      return true;
  }
  return false;
}

DVec MeshPair::fine_node_point(const IVec& node) const {
  DVec x{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    x[a] = (node[a] == fine_[a]) ? upper_[a] : lower_[a] + node[a] * fine_h_[a];
  return x;
}

DVec MeshPair::fine_cell_midpoint(const IVec& cell) const {
  DVec x{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    x[a] = lower_[a] + (cell[a] + 0.5) * fine_h_[a];
  return x;
}

DVec MeshPair::coarse_node_point(const IVec& node) const {
  DVec x{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    x[a] = (node[a] == coarse_[a]) ? upper_[a] : lower_[a] + node[a] * coarse_h_[a];
  return x;
}

DVec MeshPair::coarse_cell_midpoint(const IVec& cell) const {
  DVec x{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    x[a] = lower_[a] + (cell[a] + 0.5) * coarse_h_[a];
  return x;
}

IVec MeshPair::coarse_cell_of(const IVec& fine_cell) const {
  IVec c{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    c[a] = fine_cell[a] / refine_[a];
  return c;
}

IndexBox MeshPair::fine_cells_of(const IVec& coarse_cell) const {
  IndexBox b;
  for (int a = 0; a < dim_; ++a) {
    b.lo[a] = coarse_cell[a] * refine_[a];
    b.hi[a] = b.lo[a] + refine_[a];
  }
  return b;
}

MeshPair build_mesh_pair(int dim, const std::vector<std::pair<double, double>>& domain,
                         const std::vector<int>& coarse_cells, const std::vector<int>& refinement,
                         const std::vector<int>& dirichlet_axes) {
  if (dim < 1 || dim > kMaxDim)
    throw ConfigError("mesh dimension must be 1, 2 or 3, got " + std::to_string(dim));
  std::vector<std::array<bool, 2>> sides(dim, {false, false});
  for (int axis : dirichlet_axes) {
    if (axis < 0 || axis >= dim)
      throw ConfigError("Dirichlet axis " + std::to_string(axis) + " out of range");
    sides[axis] = {true, true};
  }
  return MeshPair(dim, domain, coarse_cells, refinement, sides);
}

std::vector<int> Patch::elements(const MeshPair& mesh) const {
  const IndexBox all = mesh.coarse_cell_box();
  std::vector<int> out;
  out.reserve(coarse_cells.size());
  for_each_index(coarse_cells, [&](const IVec& c) { out.push_back(all.linear(c)); });
  return out;
}

Patch make_patch(const MeshPair& mesh, int element, int layers) {
  const IndexBox all = mesh.coarse_cell_box();
  if (element < 0 || element >= all.size())
    throw ConfigError("element index " + std::to_string(element) + " out of range");
  if (layers < 0)
    throw ConfigError("patch layer count must be >= 0");
  Patch p;
  p.center = element;
  p.center_cell = all.coords(element);
  p.layers = layers;
  for (int a = 0; a < mesh.dim(); ++a) {
    const int r = mesh.refinement()[a];
    p.coarse_cells.lo[a] = std::max(0, p.center_cell[a] - layers);
    p.coarse_cells.hi[a] = std::min(mesh.coarse_cells()[a], p.center_cell[a] + layers + 1);
    p.coarse_nodes.lo[a] = p.coarse_cells.lo[a];
    p.coarse_nodes.hi[a] = p.coarse_cells.hi[a] + 1;
    p.fine_cells.lo[a] = p.coarse_cells.lo[a] * r;
    p.fine_cells.hi[a] = p.coarse_cells.hi[a] * r;
    p.fine_nodes.lo[a] = p.fine_cells.lo[a];
    p.fine_nodes.hi[a] = p.fine_cells.hi[a] + 1;
  }
  return p;
}

DofPartition classify_fine_dofs(const MeshPair& mesh, const Patch& patch) {
  DofPartition part;
  const IndexBox& nodes = patch.fine_nodes;
  part.free_index.assign(nodes.size(), -1);
  for_each_index(nodes, [&](const IVec& n) {
    bool fixed = mesh.is_dirichlet_fine_node(n);
    for (int a = 0; a < mesh.dim() && !fixed; ++a) {
      // Patch sides that are not part of ∂Ω.
      if (n[a] == nodes.lo[a] && nodes.lo[a] > 0)
        fixed = true;
      if (n[a] == nodes.hi[a] - 1 && nodes.hi[a] - 1 < mesh.fine_cells()[a])
        fixed = true;
    }
    const int local = nodes.linear(n);
    if (fixed) {
      part.fixed.push_back(local);
    } else {
      part.free_index[local] = static_cast<int>(part.free.size());
      part.free.push_back(local);
    }
  });
  for_each_index(patch.coarse_nodes, [&](const IVec& n) {
    if (!mesh.is_dirichlet_coarse_node(n))
      part.constrained.push_back(patch.coarse_nodes.linear(n));
  });
  return part;
}

FaceSet::FaceSet(const MeshPair& mesh) : dim_(mesh.dim()), cells_(mesh.coarse_cells()) {
  const IndexBox cells = mesh.coarse_cell_box();
  element_faces_.assign(cells.size(), {});
  for (auto& f : element_faces_)
    f.fill(-1);
  int offset = 0;
  for (int axis = 0; axis < dim_; ++axis) {
    axis_offset_[axis] = offset;
    IndexBox planes = cells;
    planes.hi[axis] += 1;
    double measure = 1.0;
    for (int b = 0; b < dim_; ++b)
      if (b != axis)
        measure *= mesh.coarse_size()[b];
    for_each_index(planes, [&](const IVec& pos) {
      Face f;
      f.axis = axis;
      f.position = pos;
      f.measure = measure;
      if (pos[axis] > 0) {
        IVec c = pos;
        c[axis] -= 1;
        f.lower = cells.linear(c);
      }
      if (pos[axis] < cells_[axis])
        f.upper = cells.linear(pos);
      if (f.lower >= 0 && f.upper >= 0)
        f.kind = FaceKind::interior;
      else {
        const int side = (f.lower < 0) ? 0 : 1;
        f.kind = mesh.dirichlet(axis, side) ? FaceKind::dirichlet : FaceKind::neumann;
      }
      const int id = static_cast<int>(faces_.size());
      if (f.lower >= 0)
        element_faces_[f.lower][2 * axis + 1] = id;
      if (f.upper >= 0)
        element_faces_[f.upper][2 * axis] = id;
      faces_.push_back(f);
    });
    offset += planes.size();
  }
}

int FaceSet::face_index(int axis, const IVec& position) const {
  IndexBox planes;
  for (int a = 0; a < dim_; ++a)
    planes.hi[a] = cells_[a] + (a == axis ? 1 : 0);
  return axis_offset_[axis] + planes.linear(position);
}

} // namespace lodadapt
