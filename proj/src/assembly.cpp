#include "cemdpg/assembly.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "q1.hpp"

namespace cemdpg {

namespace {

void check_sizes(const MeshHierarchy& mesh, const CoefficientField& field,
                 const QuadratureValues& source) {
  const std::size_t nq = static_cast<std::size_t>(mesh.num_fine_cells()) * Gauss2x2::points;
  if (field.n_fine != mesh.n_fine() || field.kappa.size() != nq || field.bx.size() != nq ||
      field.by.size() != nq) {
    throw std::invalid_argument(
        fmt::format("assembly: coefficient field sampled on a {0}x{0} grid, mesh is {1}x{1}",
                    field.n_fine, mesh.n_fine()));
  }
  if (source.size() != nq) {
    throw std::invalid_argument("assembly: source field does not match the mesh");
  }
}

Mat cell_block(const OperatorSet& op, int cell, const std::vector<ElementMatrix>& elems) {
  const MeshHierarchy& mesh = op.mesh;
  const int m = mesh.m_refine();
  const int stride = m + 1;
  const auto [cx, cy] = mesh.coarse_cell_coords(cell);
  Mat out = Mat::Zero(stride * stride, stride * stride);
  for (int ly = 0; ly < m; ++ly) {
    for (int lx = 0; lx < m; ++lx) {
      const int c = mesh.fine_cell(cx * m + lx, cy * m + ly);
      const std::array<int, 4> loc{ly * stride + lx, ly * stride + lx + 1,
                                   (ly + 1) * stride + lx, (ly + 1) * stride + lx + 1};
      const ElementMatrix& e = elems[c];
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) out(loc[a], loc[b]) += e[4 * a + b];
      }
    }
  }
  return out;
}

}  // namespace

Mat OperatorSet::cell_stiffness(int cell) const { return cell_block(*this, cell, elem_stiffness); }
Mat OperatorSet::cell_weight(int cell) const { return cell_block(*this, cell, elem_weight); }

QuadratureValues kappa_tilde_field(const MeshHierarchy& mesh, const CoefficientField& field,
                                   KappaTilde variant) {
  const double inv_coarse = static_cast<double>(mesh.n_coarse());
  const int m = mesh.m_refine();
  QuadratureValues out(field.kappa.size());
  for (int c = 0; c < mesh.num_fine_cells(); ++c) {
    const auto [ix, iy] = mesh.fine_cell_coords(c);
    for (int q = 0; q < Gauss2x2::points; ++q) {
      const auto [s, t] = Gauss2x2::reference(q);
      // position inside the coarse cell, in [0,1]^2
      const double sc = ((ix % m) + s) / m;
      const double tc = ((iy % m) + t) / m;
      const auto grads = q1::gradients(sc, tc);
      double sum = 0.0;
      for (const auto& g : grads) {
        const double norm2 = (g[0] * g[0] + g[1] * g[1]) * inv_coarse * inv_coarse;
        sum += variant == KappaTilde::paper ? std::sqrt(norm2) : norm2;
      }
      out[4 * c + q] = field.kappa[4 * c + q] * sum;
    }
  }
  return out;
}

SpMat trial_matrix(const MeshHierarchy& mesh) {
  const int m = mesh.m_refine();
  std::vector<Triplet> entries;
  for (int j = 0; j < mesh.num_interior_coarse_vertices(); ++j) {
    const auto [vx, vy] = mesh.interior_coarse_vertex_coords(j);
    for (int iy = (vy - 1) * m + 1; iy < (vy + 1) * m; ++iy) {
      const double hy = 1.0 - std::abs(iy - vy * m) / static_cast<double>(m);
      for (int ix = (vx - 1) * m + 1; ix < (vx + 1) * m; ++ix) {
        const double hx = 1.0 - std::abs(ix - vx * m) / static_cast<double>(m);
        const int dof = mesh.dof_of_vertex(mesh.fine_vertex(ix, iy));
        if (dof >= 0) entries.emplace_back(dof, j, hx * hy);
      }
    }
  }
  SpMat q(mesh.num_dofs(), mesh.num_interior_coarse_vertices());
  q.setFromTriplets(entries.begin(), entries.end());
  return q;
}

OperatorSet assemble_all(const MeshHierarchy& mesh, const CoefficientField& field,
                         const QuadratureValues& source, const AssemblyOptions& options) {
  check_sizes(mesh, field, source);
  OperatorSet op{mesh, options, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  op.kappa_tilde = kappa_tilde_field(mesh, field, options.kappa_tilde);

  const int ncell = mesh.num_fine_cells();
  const double h = mesh.h();
  const double w = h * h * Gauss2x2::weight;
  op.elem_stiffness.resize(ncell);
  op.elem_weight.resize(ncell);
  op.elem_operator.resize(ncell);
  op.F = Vec::Zero(mesh.num_dofs());

  std::vector<Triplet> ta;
  std::vector<Triplet> ts;
  std::vector<Triplet> tc;
  ta.reserve(static_cast<std::size_t>(ncell) * 16);
  ts.reserve(static_cast<std::size_t>(ncell) * 16);
  tc.reserve(static_cast<std::size_t>(ncell) * 16);

  for (int c = 0; c < ncell; ++c) {
    ElementMatrix ks{};
    ElementMatrix kc{};
    ElementMatrix kn{};
    std::array<double, 4> fe{};
    for (int q = 0; q < Gauss2x2::points; ++q) {
      const std::size_t k = 4 * static_cast<std::size_t>(c) + q;
      const auto [s, t] = Gauss2x2::reference(q);
      const auto phi = q1::values(s, t);
      auto grad = q1::gradients(s, t);
      for (auto& g : grad) {
        g[0] /= h;
        g[1] /= h;
      }
      const double kappa = field.kappa[k];
      const double bx = field.bx[k];
      const double by = field.by[k];
      const double cweight = (bx * bx + by * by) / kappa + op.kappa_tilde[k];
      std::array<double, 4> bgrad{};
      for (int a = 0; a < 4; ++a) bgrad[a] = bx * grad[a][0] + by * grad[a][1];
      for (int a = 0; a < 4; ++a) {
        fe[a] += w * source[k] * phi[a];
        for (int b = 0; b < 4; ++b) {
          ks[4 * a + b] += w * kappa * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
          kc[4 * a + b] += w * cweight * phi[a] * phi[b];
          // row a = test, column b = trial
          kn[4 * a + b] += options.convection == Convection::direct
                               ? w * phi[a] * bgrad[b]
                               : 0.5 * w * (phi[a] * bgrad[b] - phi[b] * bgrad[a]);
        }
      }
    }
    ElementMatrix ke{};
    for (int k = 0; k < 16; ++k) ke[k] = ks[k] + kn[k];
    op.elem_stiffness[c] = ks;
    op.elem_weight[c] = kc;
    op.elem_operator[c] = ke;

    const auto vs = mesh.fine_cell_vertices(c);
    std::array<int, 4> dof{};
    for (int a = 0; a < 4; ++a) dof[a] = mesh.dof_of_vertex(vs[a]);
    for (int a = 0; a < 4; ++a) {
      if (dof[a] < 0) continue;
      op.F[dof[a]] += fe[a];
      for (int b = 0; b < 4; ++b) {
        if (dof[b] < 0) continue;
        ta.emplace_back(dof[a], dof[b], ke[4 * a + b]);
        ts.emplace_back(dof[a], dof[b], ks[4 * a + b]);
        tc.emplace_back(dof[a], dof[b], kc[4 * a + b]);
      }
    }
  }

  const int n = mesh.num_dofs();
  op.A.resize(n, n);
  op.A.setFromTriplets(ta.begin(), ta.end());
  op.S.resize(n, n);
  op.S.setFromTriplets(ts.begin(), ts.end());
  op.C.resize(n, n);
  op.C.setFromTriplets(tc.begin(), tc.end());
  op.At = op.A.transpose();
  op.V = op.S + op.C;
  op.B = op.C * Vec::Ones(n);
  op.Q = trial_matrix(mesh);
  return op;
}

SpMat patch_restrict(const OperatorSet& op, const PatchIndexSet& patch, Operator which) {
  if (patch.empty()) throw std::invalid_argument("patch_restrict: patch has no dofs");
  const MeshHierarchy& mesh = op.mesh;
  const int m = mesh.m_refine();
  const CellBox& box = patch.box();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(box.width()) * box.height() * m * m * 16);
  for (int iy = box.y0 * m; iy < (box.y1 + 1) * m; ++iy) {
    for (int ix = box.x0 * m; ix < (box.x1 + 1) * m; ++ix) {
      const int c = mesh.fine_cell(ix, iy);
      const auto vs = mesh.fine_cell_vertices(c);
      std::array<int, 4> loc{};
      for (int a = 0; a < 4; ++a) {
        const int dof = mesh.dof_of_vertex(vs[a]);
        loc[a] = dof < 0 ? -1 : patch.local_index(dof);
      }
      for (int a = 0; a < 4; ++a) {
        if (loc[a] < 0) continue;
        for (int b = 0; b < 4; ++b) {
          if (loc[b] < 0) continue;
          double v = 0.0;
          switch (which) {
            case Operator::A: v = op.elem_operator[c][4 * a + b]; break;
            case Operator::At: v = op.elem_operator[c][4 * b + a]; break;
            case Operator::S: v = op.elem_stiffness[c][4 * a + b]; break;
            case Operator::C: v = op.elem_weight[c][4 * a + b]; break;
            case Operator::V:
              v = op.elem_stiffness[c][4 * a + b] + op.elem_weight[c][4 * a + b];
              break;
          }
          entries.emplace_back(loc[a], loc[b], v);
        }
      }
    }
  }
  SpMat out(patch.size(), patch.size());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Vec restrict_vector(const Vec& global, const PatchIndexSet& patch) {
  Vec out(patch.size());
  const auto dofs = patch.dofs();
  for (int k = 0; k < patch.size(); ++k) out[k] = global[dofs[k]];
  return out;
}

Vec extend_vector(const Vec& local, const PatchIndexSet& patch, int num_dofs) {
  Vec out = Vec::Zero(num_dofs);
  const auto dofs = patch.dofs();
  for (int k = 0; k < patch.size(); ++k) out[dofs[k]] = local[k];
  return out;
}

Vec to_vertex_values(const MeshHierarchy& mesh, const Vec& dofs) {
  Vec out = Vec::Zero(mesh.num_fine_vertices());
  for (int d = 0; d < mesh.num_dofs(); ++d) out[mesh.vertex_of_dof(d)] = dofs[d];
  return out;
}

double cellwise_v_energy(const OperatorSet& op, const Vec& u) {
  const Vec nodal = to_vertex_values(op.mesh, u);
  double total = 0.0;
  for (int i = 0; i < op.mesh.num_coarse_cells(); ++i) {
    const auto verts = op.mesh.coarse_cell_vertices(i);
    Vec ui(static_cast<int>(verts.size()));
    for (std::size_t k = 0; k < verts.size(); ++k) ui[static_cast<int>(k)] = nodal[verts[k]];
    total += ui.dot(op.cell_stiffness(i) * ui) + ui.dot(op.cell_weight(i) * ui);
  }
  return total;
}

void export_coordinate(const std::string& path, const SpMat& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file '" + path + "'");
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      out << fmt::format("{} {} {:.17g}\n", it.row(), it.col(), it.value());
    }
  }
}

}  // namespace cemdpg
