#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cemdpg {

/// Inclusive range of coarse cells [x0, x1] x [y0, y1].
struct CellBox {
  int x0 = 0;
  int x1 = 0;
  int y0 = 0;
  int y1 = 0;

  [[nodiscard]] bool contains(int cx, int cy) const {
    return cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1;
  }
  [[nodiscard]] bool contains(const CellBox& other) const {
    return other.x0 >= x0 && other.x1 <= x1 && other.y0 >= y0 && other.y1 <= y1;
  }
  [[nodiscard]] int width() const { return x1 - x0 + 1; }
  [[nodiscard]] int height() const { return y1 - y0 + 1; }
  bool operator==(const CellBox&) const = default;
};

/**
 * Structured two-level grid of the unit square.
 *
 * The coarse grid has n_coarse x n_coarse square cells; each is split into
 * m_refine x m_refine fine cells. Fine vertices are numbered row-major
 * (x fastest) over the (n_fine+1)^2 lattice. Degrees of freedom are the fine
 * vertices off the boundary, also row-major, so the dof numbering is
 * increasing in the vertex numbering.
 *
 * Coarse cells are numbered row-major. Trial functions live on the interior
 * coarse vertices, numbered row-major over (1..n_coarse-1)^2.
 */
class MeshHierarchy {
 public:
  MeshHierarchy(int n_coarse, int m_refine);

  [[nodiscard]] int n_coarse() const { return n_coarse_; }
  [[nodiscard]] int m_refine() const { return m_refine_; }
  [[nodiscard]] int n_fine() const { return n_fine_; }
  [[nodiscard]] double h() const { return 1.0 / n_fine_; }
  [[nodiscard]] double coarse_h() const { return 1.0 / n_coarse_; }

  [[nodiscard]] int num_coarse_cells() const { return n_coarse_ * n_coarse_; }
  [[nodiscard]] int num_interior_coarse_vertices() const {
    return (n_coarse_ - 1) * (n_coarse_ - 1);
  }
  [[nodiscard]] int num_fine_cells() const { return n_fine_ * n_fine_; }
  [[nodiscard]] int num_fine_vertices() const { return (n_fine_ + 1) * (n_fine_ + 1); }
  [[nodiscard]] int num_dofs() const { return (n_fine_ - 1) * (n_fine_ - 1); }

  [[nodiscard]] int fine_vertex(int ix, int iy) const { return iy * (n_fine_ + 1) + ix; }
  [[nodiscard]] std::array<int, 2> fine_vertex_coords(int v) const {
    return {v % (n_fine_ + 1), v / (n_fine_ + 1)};
  }
  [[nodiscard]] std::array<double, 2> fine_vertex_point(int v) const;

  [[nodiscard]] int fine_cell(int ix, int iy) const { return iy * n_fine_ + ix; }
  [[nodiscard]] std::array<int, 2> fine_cell_coords(int c) const {
    return {c % n_fine_, c / n_fine_};
  }
  /// Fine vertices of a fine cell in the order (0,0), (1,0), (0,1), (1,1).
  [[nodiscard]] std::array<int, 4> fine_cell_vertices(int c) const;

  /// -1 for vertices on the boundary of the unit square.
  [[nodiscard]] int dof_of_vertex(int v) const { return vertex_to_dof_[v]; }
  [[nodiscard]] int vertex_of_dof(int d) const { return dof_to_vertex_[d]; }
  [[nodiscard]] bool on_boundary(int v) const { return boundary_mask_[v] != 0; }
  [[nodiscard]] std::span<const std::uint8_t> boundary_mask() const { return boundary_mask_; }

  [[nodiscard]] int coarse_cell(int cx, int cy) const { return cy * n_coarse_ + cx; }
  [[nodiscard]] std::array<int, 2> coarse_cell_coords(int cell) const {
    return {cell % n_coarse_, cell / n_coarse_};
  }
  [[nodiscard]] int coarse_cell_of_fine_cell(int c) const { return coarse_of_fine_[c]; }
  /// Fine cells of a coarse cell, increasing.
  [[nodiscard]] std::vector<int> coarse_cell_fine_cells(int cell) const;
  /// All (m_refine+1)^2 fine vertices in the closure of a coarse cell, row-major.
  [[nodiscard]] std::vector<int> coarse_cell_vertices(int cell) const;

  [[nodiscard]] std::array<int, 2> interior_coarse_vertex_coords(int j) const {
    return {j % (n_coarse_ - 1) + 1, j / (n_coarse_ - 1) + 1};
  }
  [[nodiscard]] int interior_coarse_vertex(int vx, int vy) const {
    return (vy - 1) * (n_coarse_ - 1) + (vx - 1);
  }
  /// Fine vertex sitting on an interior coarse vertex.
  [[nodiscard]] int coarse_vertex_fine_vertex(int j) const { return coarse_vertex_fine_[j]; }

 private:
  int n_coarse_;
  int m_refine_;
  int n_fine_;
  std::vector<int> vertex_to_dof_;
  std::vector<int> dof_to_vertex_;
  std::vector<std::uint8_t> boundary_mask_;
  std::vector<int> coarse_of_fine_;
  std::vector<int> coarse_vertex_fine_;
};

MeshHierarchy build_hierarchy(int n_coarse, int m_refine);

enum class Trace {
  /// Functions vanish on the relative boundary of the patch (and on the boundary of the square).
  zero,
  /// Functions may be nonzero on the relative boundary; only the boundary of the square is pinned.
  free,
};

/**
 * Fine degrees of freedom of a box of coarse cells.
 *
 * Local numbering is row-major inside the box, so the global dof list is
 * strictly increasing and local_index() is plain integer arithmetic.
 */
class PatchIndexSet {
 public:
  PatchIndexSet(const MeshHierarchy& mesh, CellBox box, Trace trace = Trace::zero);

  [[nodiscard]] const CellBox& box() const { return box_; }
  [[nodiscard]] Trace trace() const { return trace_; }
  [[nodiscard]] std::span<const int> dofs() const { return dofs_; }
  [[nodiscard]] int size() const { return static_cast<int>(dofs_.size()); }
  [[nodiscard]] bool empty() const { return dofs_.empty(); }

  /// -1 when the dof is not a degree of freedom of this patch.
  [[nodiscard]] int local_index(int dof) const;
  [[nodiscard]] int global_index(int local) const { return dofs_[local]; }

  [[nodiscard]] std::vector<int> coarse_cells() const;
  /// Every fine vertex in the closure of the box, increasing.
  [[nodiscard]] std::vector<int> vertices() const;
  /// Per entry of vertices(): 1 if the vertex is a patch dof.
  [[nodiscard]] std::vector<std::uint8_t> interior_mask() const;

  [[nodiscard]] PatchIndexSet with_trace(Trace trace) const;

 private:
  PatchIndexSet() = default;
  void populate();

  int n_fine_ = 0;
  int m_refine_ = 0;
  CellBox box_;
  Trace trace_ = Trace::zero;
  // dof-vertex lattice range [lo, hi] in fine vertex coordinates
  int lo_x_ = 0, hi_x_ = -1, lo_y_ = 0, hi_y_ = -1;
  std::vector<int> dofs_;
};

/// Box of coarse cells within Chebyshev distance `layers` of `cell`, clipped to the square.
CellBox cell_box(const MeshHierarchy& mesh, int cell, int layers);
/// Coarse neighborhood of an interior coarse vertex extended by `layers`.
CellBox vertex_box(const MeshHierarchy& mesh, int vertex, int layers);

PatchIndexSet coarse_cell_patch(const MeshHierarchy& mesh, int cell, int layers,
                                Trace trace = Trace::zero);
PatchIndexSet vertex_neighborhood(const MeshHierarchy& mesh, int vertex, int layers,
                                  Trace trace = Trace::zero);
PatchIndexSet full_domain_patch(const MeshHierarchy& mesh);

}  // namespace cemdpg
