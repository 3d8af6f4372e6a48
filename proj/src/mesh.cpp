#include "cemdpg/mesh.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cemdpg {

MeshHierarchy::MeshHierarchy(int n_coarse, int m_refine)
    : n_coarse_(n_coarse), m_refine_(m_refine), n_fine_(n_coarse * m_refine) {
  if (n_coarse < 2 || m_refine < 2) {
    throw std::invalid_argument("mesh: n_coarse and m_refine must both be >= 2 (got " +
                                std::to_string(n_coarse) + ", " + std::to_string(m_refine) + ")");
  }
  const int nv = num_fine_vertices();
  vertex_to_dof_.assign(nv, -1);
  boundary_mask_.assign(nv, 0);
  dof_to_vertex_.reserve(num_dofs());
  for (int iy = 0; iy <= n_fine_; ++iy) {
    for (int ix = 0; ix <= n_fine_; ++ix) {
      const int v = fine_vertex(ix, iy);
      if (ix == 0 || iy == 0 || ix == n_fine_ || iy == n_fine_) {
        boundary_mask_[v] = 1;
      } else {
        vertex_to_dof_[v] = static_cast<int>(dof_to_vertex_.size());
        dof_to_vertex_.push_back(v);
      }
    }
  }

  coarse_of_fine_.resize(num_fine_cells());
  for (int iy = 0; iy < n_fine_; ++iy) {
    for (int ix = 0; ix < n_fine_; ++ix) {
      coarse_of_fine_[fine_cell(ix, iy)] = coarse_cell(ix / m_refine_, iy / m_refine_);
    }
  }

  coarse_vertex_fine_.resize(num_interior_coarse_vertices());
  for (int j = 0; j < num_interior_coarse_vertices(); ++j) {
    const auto [vx, vy] = interior_coarse_vertex_coords(j);
    coarse_vertex_fine_[j] = fine_vertex(vx * m_refine_, vy * m_refine_);
  }
}

std::array<double, 2> MeshHierarchy::fine_vertex_point(int v) const {
  const auto [ix, iy] = fine_vertex_coords(v);
  return {static_cast<double>(ix) / n_fine_, static_cast<double>(iy) / n_fine_};
}

std::array<int, 4> MeshHierarchy::fine_cell_vertices(int c) const {
  const auto [ix, iy] = fine_cell_coords(c);
  return {fine_vertex(ix, iy), fine_vertex(ix + 1, iy), fine_vertex(ix, iy + 1),
          fine_vertex(ix + 1, iy + 1)};
}

std::vector<int> MeshHierarchy::coarse_cell_fine_cells(int cell) const {
  const auto [cx, cy] = coarse_cell_coords(cell);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m_refine_) * m_refine_);
  for (int iy = cy * m_refine_; iy < (cy + 1) * m_refine_; ++iy) {
    for (int ix = cx * m_refine_; ix < (cx + 1) * m_refine_; ++ix) {
      out.push_back(fine_cell(ix, iy));
    }
  }
  return out;
}

std::vector<int> MeshHierarchy::coarse_cell_vertices(int cell) const {
  const auto [cx, cy] = coarse_cell_coords(cell);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m_refine_ + 1) * (m_refine_ + 1));
  for (int iy = cy * m_refine_; iy <= (cy + 1) * m_refine_; ++iy) {
    for (int ix = cx * m_refine_; ix <= (cx + 1) * m_refine_; ++ix) {
      out.push_back(fine_vertex(ix, iy));
    }
  }
  return out;
}

MeshHierarchy build_hierarchy(int n_coarse, int m_refine) {
  return MeshHierarchy(n_coarse, m_refine);
}

PatchIndexSet::PatchIndexSet(const MeshHierarchy& mesh, CellBox box, Trace trace)
    : n_fine_(mesh.n_fine()), m_refine_(mesh.m_refine()), box_(box), trace_(trace) {
  const int nc = mesh.n_coarse();
  if (box.x0 < 0 || box.y0 < 0 || box.x1 >= nc || box.y1 >= nc || box.x0 > box.x1 ||
      box.y0 > box.y1) {
    throw std::invalid_argument("patch: cell box outside the coarse grid");
  }
  populate();
}

PatchIndexSet PatchIndexSet::with_trace(Trace trace) const {
  PatchIndexSet p;
  p.n_fine_ = n_fine_;
  p.m_refine_ = m_refine_;
  p.box_ = box_;
  p.trace_ = trace;
  p.populate();
  return p;
}

void PatchIndexSet::populate() {
  const int fx0 = box_.x0 * m_refine_;
  const int fx1 = (box_.x1 + 1) * m_refine_;
  const int fy0 = box_.y0 * m_refine_;
  const int fy1 = (box_.y1 + 1) * m_refine_;
  if (trace_ == Trace::zero) {
    // Strict interior of the box; vertices of the square's boundary are
    // automatically on the box boundary when the box is clipped.
    lo_x_ = fx0 + 1;
    hi_x_ = fx1 - 1;
    lo_y_ = fy0 + 1;
    hi_y_ = fy1 - 1;
  } else {
    lo_x_ = std::max(fx0, 1);
    hi_x_ = std::min(fx1, n_fine_ - 1);
    lo_y_ = std::max(fy0, 1);
    hi_y_ = std::min(fy1, n_fine_ - 1);
  }
  dofs_.clear();
  if (hi_x_ < lo_x_ || hi_y_ < lo_y_) return;
  dofs_.reserve(static_cast<std::size_t>(hi_x_ - lo_x_ + 1) * (hi_y_ - lo_y_ + 1));
  const int stride = n_fine_ - 1;
  for (int iy = lo_y_; iy <= hi_y_; ++iy) {
    for (int ix = lo_x_; ix <= hi_x_; ++ix) {
      dofs_.push_back((iy - 1) * stride + (ix - 1));
    }
  }
}

int PatchIndexSet::local_index(int dof) const {
  const int stride = n_fine_ - 1;
  const int ix = dof % stride + 1;
  const int iy = dof / stride + 1;
  if (ix < lo_x_ || ix > hi_x_ || iy < lo_y_ || iy > hi_y_) return -1;
  return (iy - lo_y_) * (hi_x_ - lo_x_ + 1) + (ix - lo_x_);
}

std::vector<int> PatchIndexSet::coarse_cells() const {
  const int nc = n_fine_ / m_refine_;
  std::vector<int> out;
  for (int cy = box_.y0; cy <= box_.y1; ++cy) {
    for (int cx = box_.x0; cx <= box_.x1; ++cx) out.push_back(cy * nc + cx);
  }
  return out;
}

std::vector<int> PatchIndexSet::vertices() const {
  std::vector<int> out;
  for (int iy = box_.y0 * m_refine_; iy <= (box_.y1 + 1) * m_refine_; ++iy) {
    for (int ix = box_.x0 * m_refine_; ix <= (box_.x1 + 1) * m_refine_; ++ix) {
      out.push_back(iy * (n_fine_ + 1) + ix);
    }
  }
  return out;
}

std::vector<std::uint8_t> PatchIndexSet::interior_mask() const {
  std::vector<std::uint8_t> out;
  for (int v : vertices()) {
    const int ix = v % (n_fine_ + 1);
    const int iy = v / (n_fine_ + 1);
    out.push_back(ix >= lo_x_ && ix <= hi_x_ && iy >= lo_y_ && iy <= hi_y_ ? 1 : 0);
  }
  return out;
}

CellBox cell_box(const MeshHierarchy& mesh, int cell, int layers) {
  if (cell < 0 || cell >= mesh.num_coarse_cells()) {
    throw std::out_of_range("coarse cell index " + std::to_string(cell) + " out of range");
  }
  if (layers < 0) throw std::invalid_argument("layers must be >= 0");
  const int nc = mesh.n_coarse();
  const auto [cx, cy] = mesh.coarse_cell_coords(cell);
  return {std::max(cx - layers, 0), std::min(cx + layers, nc - 1), std::max(cy - layers, 0),
          std::min(cy + layers, nc - 1)};
}

CellBox vertex_box(const MeshHierarchy& mesh, int vertex, int layers) {
  if (vertex < 0 || vertex >= mesh.num_interior_coarse_vertices()) {
    throw std::out_of_range("vertex " + std::to_string(vertex) +
                            " is not an interior coarse vertex");
  }
  if (layers < 0) throw std::invalid_argument("layers must be >= 0");
  const int nc = mesh.n_coarse();
  const auto [vx, vy] = mesh.interior_coarse_vertex_coords(vertex);
  // cells touching vertex (vx, vy) are vx-1..vx by vy-1..vy
  return {std::max(vx - 1 - layers, 0), std::min(vx + layers, nc - 1),
          std::max(vy - 1 - layers, 0), std::min(vy + layers, nc - 1)};
}

PatchIndexSet coarse_cell_patch(const MeshHierarchy& mesh, int cell, int layers, Trace trace) {
  return PatchIndexSet(mesh, cell_box(mesh, cell, layers), trace);
}

PatchIndexSet vertex_neighborhood(const MeshHierarchy& mesh, int vertex, int layers,
                                  Trace trace) {
  return PatchIndexSet(mesh, vertex_box(mesh, vertex, layers), trace);
}

PatchIndexSet full_domain_patch(const MeshHierarchy& mesh) {
  const int nc = mesh.n_coarse();
  return PatchIndexSet(mesh, CellBox{0, nc - 1, 0, nc - 1});
}

}  // namespace cemdpg
