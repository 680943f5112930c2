#pragma once

/** @file grid.hpp
    @brief Nested tensor-product coarse/fine meshes, element patches, coarse faces
    and fine degree-of-freedom classification on patches.

    All index sets are axis-aligned boxes. Every box carries three axes; axes at
    or beyond the mesh dimension have extent one, so loops can be written once
    for d = 1, 2, 3. Linear indices are lexicographic with x fastest.
*/

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace lodadapt {

constexpr int kMaxDim = 3;

using IVec = std::array<int, kMaxDim>;
using DVec = std::array<double, kMaxDim>;

/// Half-open index box [lo, hi) per axis.
struct IndexBox {
  IVec lo{0, 0, 0};
  IVec hi{1, 1, 1};

  int extent(int axis) const { return hi[axis] - lo[axis]; }
  int size() const { return extent(0) * extent(1) * extent(2); }

  bool contains(const IVec& c) const {
    for (int a = 0; a < kMaxDim; ++a)
      if (c[a] < lo[a] || c[a] >= hi[a])
        return false;
    return true;
  }

  int linear(const IVec& c) const {
    return (c[0] - lo[0]) + extent(0) * ((c[1] - lo[1]) + extent(1) * (c[2] - lo[2]));
  }

  IVec coords(int index) const {
    IVec c;
    c[0] = lo[0] + index % extent(0);
    index /= extent(0);
    c[1] = lo[1] + index % extent(1);
    c[2] = lo[2] + index / extent(1);
    return c;
  }

  friend bool operator==(const IndexBox&, const IndexBox&) = default;
};

/// Calls fn(coords) for every index in the box, lexicographic order.
template <class Fn>
void for_each_index(const IndexBox& box, Fn&& fn) {
  IVec c;
  for (c[2] = box.lo[2]; c[2] < box.hi[2]; ++c[2])
    for (c[1] = box.lo[1]; c[1] < box.hi[1]; ++c[1])
      for (c[0] = box.lo[0]; c[0] < box.hi[0]; ++c[0])
        fn(c);
}

/// Offset of local corner `corner` (bit a = upper side along axis a).
inline IVec corner_offset(int corner) {
  return {corner & 1, (corner >> 1) & 1, (corner >> 2) & 1};
}

/// Structured coarse mesh T_H with a uniformly refined fine mesh T_h.
///
/// Dirichlet boundary is a union of closed box sides; everything else is
/// Neumann.
class MeshPair {
public:
  MeshPair(int dim, std::vector<std::pair<double, double>> domain, std::vector<int> coarse_cells,
           std::vector<int> refinement, std::vector<std::array<bool, 2>> dirichlet_sides);

  int dim() const { return dim_; }
  int corners() const { return 1 << dim_; }

  const IVec& coarse_cells() const { return coarse_; }
  const IVec& fine_cells() const { return fine_; }
  const IVec& refinement() const { return refine_; }
  const DVec& lower() const { return lower_; }
  const DVec& upper() const { return upper_; }
  const DVec& coarse_size() const { return coarse_h_; }
  const DVec& fine_size() const { return fine_h_; }

  IndexBox coarse_cell_box() const;
  IndexBox coarse_node_box() const;
  IndexBox fine_cell_box() const;
  IndexBox fine_node_box() const;

  int num_coarse_cells() const { return coarse_cell_box().size(); }
  int num_coarse_nodes() const { return coarse_node_box().size(); }
  int num_fine_cells() const { return fine_cell_box().size(); }
  int num_fine_nodes() const { return fine_node_box().size(); }

  double coarse_cell_volume() const;
  double fine_cell_volume() const;

  bool dirichlet(int axis, int side) const { return dirichlet_[axis][side]; }
  bool has_dirichlet() const;
  bool is_dirichlet_fine_node(const IVec& node) const;
  bool is_dirichlet_coarse_node(const IVec& node) const;

  DVec fine_node_point(const IVec& node) const;
  DVec fine_cell_midpoint(const IVec& cell) const;
  DVec coarse_node_point(const IVec& node) const;
  DVec coarse_cell_midpoint(const IVec& cell) const;

  /// Coarse cell containing a fine cell.
  IVec coarse_cell_of(const IVec& fine_cell) const;
  /// Fine cells of one coarse cell.
  IndexBox fine_cells_of(const IVec& coarse_cell) const;

private:
  int dim_;
  IVec coarse_{1, 1, 1};
  IVec refine_{1, 1, 1};
  IVec fine_{1, 1, 1};
  DVec lower_{0, 0, 0};
  DVec upper_{0, 0, 0};
  DVec coarse_h_{1, 1, 1};
  DVec fine_h_{1, 1, 1};
  std::array<std::array<bool, 2>, kMaxDim> dirichlet_{};
};

/// Checked construction; `dirichlet_axes` lists axes whose both sides are Γ_D.
MeshPair build_mesh_pair(int dim, const std::vector<std::pair<double, double>>& domain,
                         const std::vector<int>& coarse_cells, const std::vector<int>& refinement,
                         const std::vector<int>& dirichlet_axes);

/// k-layer element patch U_k(T).
struct Patch {
  int center = 0;
  IVec center_cell{0, 0, 0};
  int layers = 0;
  IndexBox coarse_cells;
  IndexBox coarse_nodes;
  IndexBox fine_cells;
  IndexBox fine_nodes;

  std::vector<int> elements(const MeshPair& mesh) const;
  bool contains_element(const IVec& coarse_cell) const { return coarse_cells.contains(coarse_cell); }
};

Patch make_patch(const MeshPair& mesh, int element, int layers);

/// Free/fixed split of the patch fine nodes, plus the coarse nodes whose
/// interpolation value has to vanish for patch functions.
struct DofPartition {
  std::vector<int> free;        ///< local fine node indices
  std::vector<int> fixed;       ///< local fine node indices
  std::vector<int> free_index;  ///< local fine node -> position in `free`, or -1
  std::vector<int> constrained; ///< local coarse node indices (patch.coarse_nodes box)
};

DofPartition classify_fine_dofs(const MeshPair& mesh, const Patch& patch);

enum class FaceKind { interior, dirichlet, neumann };

/// A coarse face. Its normal is always +e_axis, pointing from `lower` to `upper`.
struct Face {
  int axis = 0;
  IVec position{0, 0, 0}; ///< plane index along `axis`, cell index along the other axes
  int lower = -1;         ///< coarse element below the plane, -1 on the lower boundary
  int upper = -1;         ///< coarse element above the plane, -1 on the upper boundary
  double measure = 0.0;
  FaceKind kind = FaceKind::interior;

  bool boundary() const { return kind != FaceKind::interior; }
};

/// Coarse faces with adjacency. Local face 2a+s of an element is its lower
/// (s = 0) or upper (s = 1) face along axis a.
class FaceSet {
public:
  explicit FaceSet(const MeshPair& mesh);

  const std::vector<Face>& faces() const { return faces_; }
  int size() const { return static_cast<int>(faces_.size()); }
  const Face& operator[](int i) const { return faces_[i]; }

  int face_of(int element, int local_face) const { return element_faces_[element][local_face]; }
  int local_faces() const { return 2 * dim_; }
  /// Outward orientation of the face normal seen from the element.
  static double orientation(int local_face) { return (local_face % 2 == 0) ? -1.0 : 1.0; }

  int face_index(int axis, const IVec& position) const;

private:
  int dim_;
  IVec cells_;
  std::array<int, kMaxDim> axis_offset_{};
  std::vector<Face> faces_;
  std::vector<std::array<int, 2 * kMaxDim>> element_faces_;
};

} // namespace lodadapt
