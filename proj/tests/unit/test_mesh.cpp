#include <doctest.h>

#include <algorithm>
#include <set>

#include "cemdpg/mesh.hpp"

using namespace cemdpg;

namespace {

// Brute-force patch: every fine vertex strictly inside the box (zero trace)
// or in its closure minus the boundary of the square (free trace).
std::vector<int> brute_force_dofs(const MeshHierarchy& mesh, const CellBox& box, Trace trace) {
  const int m = mesh.m_refine();
  const int n = mesh.n_fine();
  std::vector<int> out;
  for (int iy = 1; iy < n; ++iy) {
    for (int ix = 1; ix < n; ++ix) {
      const int x0 = box.x0 * m, x1 = (box.x1 + 1) * m;
      const int y0 = box.y0 * m, y1 = (box.y1 + 1) * m;
      const bool inside = trace == Trace::zero ? (ix > x0 && ix < x1 && iy > y0 && iy < y1)
                                               : (ix >= x0 && ix <= x1 && iy >= y0 && iy <= y1);
      if (inside) out.push_back(mesh.dof_of_vertex(mesh.fine_vertex(ix, iy)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> as_vector(std::span<const int> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("hierarchy sizes") {
  const MeshHierarchy mesh(10, 20);
  CHECK(mesh.n_fine() == 200);
  CHECK(mesh.num_coarse_cells() == 100);
  CHECK(mesh.h() == doctest::Approx(1.0 / 200.0));
  CHECK(mesh.num_interior_coarse_vertices() == 81);
  CHECK(mesh.num_dofs() == 199 * 199);

  const MeshHierarchy small = build_hierarchy(2, 2);
  CHECK(small.n_fine() == 4);
  CHECK(small.num_coarse_cells() == 4);
  CHECK(small.num_interior_coarse_vertices() == 1);
  CHECK(small.coarse_vertex_fine_vertex(0) == small.fine_vertex(2, 2));
}

TEST_CASE("hierarchy rejects degenerate counts") {
  CHECK_THROWS_AS(MeshHierarchy(1, 4), std::invalid_argument);
  CHECK_THROWS_AS(MeshHierarchy(4, 1), std::invalid_argument);
  CHECK_THROWS_AS(MeshHierarchy(0, 0), std::invalid_argument);
}

TEST_CASE("coarse cell (0,0) of a 4x3 hierarchy") {
  const MeshHierarchy mesh(4, 3);
  std::vector<int> expected;
  for (int iy = 0; iy < 3; ++iy) {
    for (int ix = 0; ix < 3; ++ix) expected.push_back(iy * 12 + ix);
  }
  auto cells = mesh.coarse_cell_fine_cells(0);
  std::sort(cells.begin(), cells.end());
  CHECK(cells == expected);
}

TEST_CASE("coarse cells partition the fine grid") {
  const MeshHierarchy mesh(5, 3);
  std::vector<int> owner(mesh.num_fine_cells(), 0);
  for (int c = 0; c < mesh.num_coarse_cells(); ++c) {
    for (int f : mesh.coarse_cell_fine_cells(c)) {
      ++owner[f];
      CHECK(mesh.coarse_cell_of_fine_cell(f) == c);
    }
  }
  CHECK(std::all_of(owner.begin(), owner.end(), [](int k) { return k == 1; }));
}

TEST_CASE("boundary mask and dof numbering") {
  const MeshHierarchy mesh(3, 4);
  const auto mask = mesh.boundary_mask();
  CHECK(std::count(mask.begin(), mask.end(), 1) == 4 * mesh.n_fine());
  for (int d = 0; d < mesh.num_dofs(); ++d) {
    CHECK(mesh.dof_of_vertex(mesh.vertex_of_dof(d)) == d);
    CHECK_FALSE(mesh.on_boundary(mesh.vertex_of_dof(d)));
  }
  for (int v = 0; v < mesh.num_fine_vertices(); ++v) {
    CHECK((mesh.dof_of_vertex(v) < 0) == mesh.on_boundary(v));
  }
}

TEST_CASE("cell patches are clipped boxes") {
  const MeshHierarchy mesh(10, 2);
  const CellBox interior = cell_box(mesh, mesh.coarse_cell(5, 5), 1);
  CHECK(interior.width() == 3);
  CHECK(interior.height() == 3);

  const CellBox corner = cell_box(mesh, mesh.coarse_cell(0, 0), 1);
  CHECK(corner == CellBox{0, 1, 0, 1});

  // Cells within Chebyshev distance 3 of (2,2), counted one by one.
  int count = 0;
  for (int cy = 0; cy < 10; ++cy) {
    for (int cx = 0; cx < 10; ++cx) count += std::max(std::abs(cx - 2), std::abs(cy - 2)) <= 3;
  }
  const CellBox b = cell_box(mesh, mesh.coarse_cell(2, 2), 3);
  CHECK(b.width() * b.height() == count);
  CHECK(coarse_cell_patch(mesh, mesh.coarse_cell(2, 2), 3).coarse_cells().size() ==
        static_cast<std::size_t>(count));

  const PatchIndexSet self = coarse_cell_patch(mesh, mesh.coarse_cell(3, 4), 0);
  CHECK(self.coarse_cells() == std::vector<int>{mesh.coarse_cell(3, 4)});
}

TEST_CASE("vertex neighborhoods") {
  const MeshHierarchy mesh(10, 2);
  const int centre = mesh.interior_coarse_vertex(5, 5);
  CHECK(vertex_neighborhood(mesh, centre, 0).coarse_cells().size() == 4);
  const CellBox b2 = vertex_box(mesh, centre, 2);
  CHECK(b2.width() == 6);
  CHECK(b2.height() == 6);

  const int edge = mesh.interior_coarse_vertex(1, 5);
  const CellBox clipped = vertex_box(mesh, edge, 1);
  CHECK(clipped.x0 == 0);
  CHECK(clipped.x1 == 2);
  CHECK(clipped.height() == 4);

  CHECK_THROWS_AS(vertex_neighborhood(mesh, -1, 0), std::out_of_range);
  CHECK_THROWS_AS(vertex_neighborhood(mesh, mesh.num_interior_coarse_vertices(), 0), std::out_of_range);
}

TEST_CASE("patch dofs match brute force") {
  const MeshHierarchy mesh(6, 3);
  for (Trace trace : {Trace::zero, Trace::free}) {
    for (int cell : {0, 7, 14, 35}) {
      for (int l : {0, 1, 2}) {
        const PatchIndexSet p = coarse_cell_patch(mesh, cell, l, trace);
        CHECK(as_vector(p.dofs()) == brute_force_dofs(mesh, p.box(), trace));
        CHECK(std::is_sorted(p.dofs().begin(), p.dofs().end()));
        for (int k = 0; k < p.size(); ++k) CHECK(p.local_index(p.global_index(k)) == k);
      }
    }
  }
}

TEST_CASE("local_index is -1 outside the patch") {
  const MeshHierarchy mesh(4, 3);
  const PatchIndexSet p = coarse_cell_patch(mesh, 0, 0);
  const std::set<int> inside(p.dofs().begin(), p.dofs().end());
  for (int d = 0; d < mesh.num_dofs(); ++d) CHECK((p.local_index(d) >= 0) == (inside.count(d) == 1));
}

TEST_CASE("patches grow monotonically and cover the domain") {
  const MeshHierarchy mesh(5, 2);
  const PatchIndexSet full = full_domain_patch(mesh);
  CHECK(full.size() == mesh.num_dofs());
  for (int cell = 0; cell < mesh.num_coarse_cells(); ++cell) {
    std::vector<int> previous;
    for (int l = 0; l <= mesh.n_coarse(); ++l) {
      const auto dofs = as_vector(coarse_cell_patch(mesh, cell, l).dofs());
      CHECK(std::includes(dofs.begin(), dofs.end(), previous.begin(), previous.end()));
      previous = dofs;
    }
    CHECK(previous == as_vector(full.dofs()));
  }
  for (int v = 0; v < mesh.num_interior_coarse_vertices(); ++v) {
    CHECK(as_vector(vertex_neighborhood(mesh, v, mesh.n_coarse()).dofs()) == as_vector(full.dofs()));
  }
}

TEST_CASE("interior mask of a free patch") {
  const MeshHierarchy mesh(4, 2);
  const PatchIndexSet zero = coarse_cell_patch(mesh, mesh.coarse_cell(1, 1), 0);
  const PatchIndexSet free = zero.with_trace(Trace::free);
  CHECK(zero.size() == 1);
  CHECK(free.size() == 9);
  const auto mask = free.interior_mask();
  CHECK(std::count(mask.begin(), mask.end(), 1) == 9);
  CHECK(free.vertices().size() == 9);
}
