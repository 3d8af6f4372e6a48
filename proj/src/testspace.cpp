#include "cemdpg/testspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace cemdpg {

// ---------------------------------------------------------------------------
// PiOperator

PiOperator::PiOperator(const OperatorSet& op, const AuxiliaryBasis& aux, PiMode mode, double floor)
    : mode_(mode), j_per_cell_(aux.j_per_cell), num_dofs_(op.num_dofs()) {
  const int n = op.mesh.num_coarse_cells();
  if (static_cast<int>(aux.cells.size()) != n) {
    throw std::invalid_argument("pi: auxiliary basis does not match the coarse grid");
  }
  if (mode == PiMode::inverse_lambda && !(floor >= 0.0)) {
    throw std::invalid_argument("pi: inverse_lambda floor must be >= 0");
  }
  cells_.resize(n);
  for (int i = 0; i < n; ++i) {
    const CellEigenpairs& pairs = aux.cells[i];
    Cell& cell = cells_[i];
    cell.basis = pairs.vectors;
    cell.weight = op.cell_weight(i).sparseView();
    cell.c_basis = cell.weight * cell.basis;
    cell.weights = Vec::Ones(pairs.count());
    if (mode == PiMode::inverse_lambda) {
      const double scale = pairs.first_excluded();
      for (int j = 0; j < pairs.count(); ++j) {
        const double denom = std::max(pairs.eigenvalues[j], floor);
        if (!(denom > 1e-12 * scale)) {
          throw std::invalid_argument(fmt::format(
              "pi: inverse_lambda weight 1/lambda is singular on cell {} (lambda_{} = {:.3e}); "
              "use a positive floor",
              i, j + 1, pairs.eigenvalues[j]));
        }
        cell.weights[j] = 1.0 / denom;
      }
    }
    const auto verts = op.mesh.coarse_cell_vertices(i);
    cell.dofs.resize(verts.size());
    for (std::size_t k = 0; k < verts.size(); ++k) cell.dofs[k] = op.mesh.dof_of_vertex(verts[k]);
  }
}

BrokenField PiOperator::broken(const Vec& u) const {
  if (u.size() != num_dofs_) throw std::invalid_argument("pi: vector size mismatch");
  BrokenField out(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& dofs = cells_[i].dofs;
    Vec ui(static_cast<int>(dofs.size()));
    for (std::size_t k = 0; k < dofs.size(); ++k) {
      ui[static_cast<int>(k)] = dofs[k] >= 0 ? u[dofs[k]] : 0.0;
    }
    out[i] = std::move(ui);
  }
  return out;
}

BrokenField PiOperator::apply(const BrokenField& u) const {
  if (u.size() != cells_.size()) throw std::invalid_argument("pi: broken field size mismatch");
  BrokenField out(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell& cell = cells_[i];
    const Vec coef = cell.weights.cwiseProduct(cell.c_basis.transpose() * u[i]);
    out[i] = cell.basis * coef;
  }
  return out;
}

BrokenField PiOperator::apply(const Vec& u) const { return apply(broken(u)); }

double PiOperator::c_inner(const BrokenField& u, const BrokenField& v) const {
  double total = 0.0;
  for (std::size_t i = 0; i < cells_.size(); ++i) total += u[i].dot(cells_[i].weight * v[i]);
  return total;
}

BrokenField PiOperator::aux_function(int cell, int j) const {
  BrokenField out(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    out[i] = static_cast<int>(i) == cell ? Vec(cells_[i].basis.col(j))
                                         : Vec::Zero(cells_[i].basis.rows());
  }
  return out;
}

Vec PiOperator::functional(int cell, int j) const {
  Vec g = Vec::Zero(num_dofs_);
  const Cell& c = cells_[cell];
  for (std::size_t k = 0; k < c.dofs.size(); ++k) {
    if (c.dofs[k] >= 0) g[c.dofs[k]] += c.c_basis(static_cast<int>(k), j);
  }
  return g;
}

// ---------------------------------------------------------------------------
// PatchSolver

PatchSolver::PatchSolver(const OperatorSet& op, PatchIndexSet patch, const PiOperator* pi,
                         PenaltyForm form)
    : patch_(std::move(patch)), adjoint_(patch_restrict(op, patch_, Operator::At)) {
  const int n = patch_.size();
  if (form == PenaltyForm::none) {
    lu_.emplace(adjoint_);
    return;
  }
  if (pi == nullptr) throw std::invalid_argument("patch solver: penalty requested without pi");

  // Border columns: one per aux function of every cell in the patch.
  const auto cells = patch_.coarse_cells();
  border_ = static_cast<int>(cells.size()) * pi->j_per_cell();
  std::vector<Triplet> entries;
  entries.reserve(adjoint_.nonZeros() + 3 * static_cast<std::size_t>(border_) *
                                            pi->cell_dofs(0).size());
  for (int k = 0; k < adjoint_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(adjoint_, k); it; ++it) {
      entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  int col = n;
  for (int cell : cells) {
    const Mat& cb = pi->weighted_basis(cell);
    const auto& dofs = pi->cell_dofs(cell);
    for (int j = 0; j < pi->j_per_cell(); ++j, ++col) {
      for (std::size_t k = 0; k < dofs.size(); ++k) {
        if (dofs[k] < 0) continue;
        const int loc = patch_.local_index(dofs[k]);
        if (loc < 0) continue;
        const double v = cb(static_cast<int>(k), j);
        entries.emplace_back(loc, col, v);
        entries.emplace_back(col, loc, v);
      }
      const double w = pi->weight(cell, j);
      const double pw = form == PenaltyForm::projected_both ? w * w : w;
      entries.emplace_back(col, col, -1.0 / pw);
    }
  }
  SpMat bordered(n + border_, n + border_);
  bordered.setFromTriplets(entries.begin(), entries.end());
  lu_.emplace(bordered);
}

Vec PatchSolver::solve(const Vec& rhs) const {
  const int n = patch_.size();
  if (rhs.size() != n) throw std::invalid_argument("patch solver: rhs size mismatch");
  if (border_ == 0) return lu_->solve(rhs);
  Vec padded = Vec::Zero(n + border_);
  padded.head(n) = rhs;
  return lu_->solve(padded).head(n);
}

Mat PatchSolver::solve(const Mat& rhs) const {
  const int n = patch_.size();
  if (rhs.rows() != n) throw std::invalid_argument("patch solver: rhs size mismatch");
  if (border_ == 0) return lu_->solve(rhs);
  Mat padded = Mat::Zero(n + border_, rhs.cols());
  padded.topRows(n) = rhs;
  return lu_->solve(padded).topRows(n);
}

// ---------------------------------------------------------------------------
// Columns

namespace {

Vec trial_column(const OperatorSet& op, int vertex) { return Vec(op.Q.col(vertex)); }

Vec eta_rhs(const OperatorSet& op, const PatchSolver& solver, int vertex, const Vec& xi) {
  const PatchIndexSet& patch = solver.patch();
  const SpMat v_local = patch_restrict(op, patch, Operator::V);
  return v_local * restrict_vector(trial_column(op, vertex), patch) -
         solver.adjoint_block() * restrict_vector(xi, patch);
}

}  // namespace

Vec compute_psi(const OperatorSet& op, const PiOperator& pi, int cell, int j, int layers) {
  if (j < 0 || j >= pi.j_per_cell()) throw std::out_of_range("psi: aux index out of range");
  PatchSolver solver(op, coarse_cell_patch(op.mesh, cell, layers), &pi,
                     PenaltyForm::projected_both);
  const double w = pi.weight(cell, j);
  const Vec rhs = w * w * restrict_vector(pi.functional(cell, j), solver.patch());
  return extend_vector(solver.solve(rhs), solver.patch(), op.num_dofs());
}

Vec compute_xi(const OperatorSet& op, int vertex) {
  PatchSolver solver(op, vertex_neighborhood(op.mesh, vertex, 0), nullptr, PenaltyForm::none);
  const Vec sq = op.S * trial_column(op, vertex);
  return extend_vector(solver.solve(restrict_vector(sq, solver.patch())), solver.patch(),
                       op.num_dofs());
}

Vec compute_eta(const OperatorSet& op, const PiOperator& pi, int vertex, int layers,
                const Vec& xi, Trace space) {
  PatchSolver solver(op, vertex_neighborhood(op.mesh, vertex, layers, space), &pi,
                     PenaltyForm::projected_both);
  return extend_vector(solver.solve(eta_rhs(op, solver, vertex, xi)), solver.patch(),
                       op.num_dofs());
}

int TestSpace::num_spectral() const {
  return static_cast<int>(std::count_if(columns.begin(), columns.end(), [](const TestColumn& c) {
    return c.kind == ColumnKind::spectral;
  }));
}

namespace {

struct LocalColumns {
  std::vector<int> dofs;
  Mat values;  // patch dofs x columns
};

TestSpace assemble_space(const OperatorSet& op, const std::vector<LocalColumns>& blocks,
                         std::vector<TestColumn> meta) {
  std::vector<Triplet> entries;
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.values.size();
  entries.reserve(total);
  int col = 0;
  for (const auto& b : blocks) {
    for (int j = 0; j < b.values.cols(); ++j, ++col) {
      for (std::size_t k = 0; k < b.dofs.size(); ++k) {
        const double v = b.values(static_cast<int>(k), j);
        if (v != 0.0) entries.emplace_back(b.dofs[k], col, v);
      }
    }
  }
  TestSpace space;
  space.W.resize(op.num_dofs(), col);
  space.W.setFromTriplets(entries.begin(), entries.end());
  space.columns = std::move(meta);
  return space;
}

std::vector<int> to_vector(std::span<const int> s) { return {s.begin(), s.end()}; }

}  // namespace

TestSpace build_test_space(const OperatorSet& op, const PiOperator& pi,
                           const TestSpaceOptions& options) {
  if (options.layers < 0) throw std::invalid_argument("test space: layers must be >= 0");
  const MeshHierarchy& mesh = op.mesh;
  const int ncell = mesh.num_coarse_cells();
  const int nvert = mesh.num_interior_coarse_vertices();
  const int jcount = pi.j_per_cell();

  std::vector<LocalColumns> blocks(ncell + nvert);
  parallel_for(ncell, [&](int i) {
    PatchSolver solver(op, coarse_cell_patch(mesh, i, options.layers), &pi,
                       PenaltyForm::projected_both);
    Mat rhs(solver.patch().size(), jcount);
    for (int j = 0; j < jcount; ++j) {
      const double w = pi.weight(i, j);
      rhs.col(j) = w * w * restrict_vector(pi.functional(i, j), solver.patch());
    }
    blocks[i] = {to_vector(solver.patch().dofs()), solver.solve(rhs)};
  });
  parallel_for(nvert, [&](int v) {
    const Vec xi = compute_xi(op, v);
    PatchSolver solver(op, vertex_neighborhood(mesh, v, options.layers, options.eta_space), &pi,
                       PenaltyForm::projected_both);
    Vec column = solver.solve(eta_rhs(op, solver, v, xi));
    column += restrict_vector(xi, solver.patch());
    blocks[ncell + v] = {to_vector(solver.patch().dofs()), Mat(column)};
  });

  std::vector<TestColumn> meta;
  meta.reserve(static_cast<std::size_t>(ncell) * jcount + nvert);
  for (int i = 0; i < ncell; ++i) {
    for (int j = 0; j < jcount; ++j) {
      meta.push_back({ColumnKind::spectral, i, j, options.layers,
                      cell_box(mesh, i, options.layers), Trace::zero});
    }
  }
  for (int v = 0; v < nvert; ++v) {
    meta.push_back({ColumnKind::trial, v, 0, options.layers,
                    vertex_box(mesh, v, options.layers), options.eta_space});
  }
  return assemble_space(op, blocks, std::move(meta));
}

TestSpace build_global_test_space(const OperatorSet& op, const PiOperator& pi, int max_dofs) {
  if (op.num_dofs() > max_dofs) {
    throw std::invalid_argument(fmt::format(
        "global test space: {} fine dofs exceed the limit of {}", op.num_dofs(), max_dofs));
  }
  const MeshHierarchy& mesh = op.mesh;
  const int ncell = mesh.num_coarse_cells();
  const int nvert = mesh.num_interior_coarse_vertices();
  const int jcount = pi.j_per_cell();
  const int everywhere = mesh.n_coarse();
  const PatchIndexSet domain = full_domain_patch(mesh);
  const std::vector<int> all_dofs = to_vector(domain.dofs());

  // a*(psi, v) + c(pi psi, v) = c(phi_j, pi v)
  PatchSolver spectral(op, domain, &pi, PenaltyForm::projected_left);
  Mat rhs1(op.num_dofs(), ncell * jcount);
  for (int i = 0; i < ncell; ++i) {
    for (int j = 0; j < jcount; ++j) rhs1.col(i * jcount + j) = pi.weight(i, j) * pi.functional(i, j);
  }
  // a*(eta, v) + c(pi eta, pi v) = (q, v)_V - a(v, xi)
  PatchSolver trial(op, domain, &pi, PenaltyForm::projected_both);
  Mat rhs2(op.num_dofs(), nvert);
  Mat xis(op.num_dofs(), nvert);
  for (int v = 0; v < nvert; ++v) {
    xis.col(v) = compute_xi(op, v);
    rhs2.col(v) = op.V * trial_column(op, v) - op.At * xis.col(v);
  }

  std::vector<LocalColumns> blocks;
  blocks.push_back({all_dofs, spectral.solve(rhs1)});
  blocks.push_back({all_dofs, trial.solve(rhs2) + xis});

  std::vector<TestColumn> meta;
  const CellBox whole{0, everywhere - 1, 0, everywhere - 1};
  for (int i = 0; i < ncell; ++i) {
    for (int j = 0; j < jcount; ++j) {
      meta.push_back({ColumnKind::spectral, i, j, everywhere, whole, Trace::zero});
    }
  }
  for (int v = 0; v < nvert; ++v) {
    meta.push_back({ColumnKind::trial, v, 0, everywhere, whole, Trace::zero});
  }
  return assemble_space(op, blocks, std::move(meta));
}

bool column_within_support(const OperatorSet& op, const TestSpace& space, int k) {
  const TestColumn& meta = space.columns[k];
  const PatchIndexSet patch(op.mesh, meta.support, meta.trace);
  for (SpMat::InnerIterator it(space.W, k); it; ++it) {
    if (it.value() != 0.0 && patch.local_index(it.row()) < 0) return false;
  }
  return true;
}

double v_norm(const OperatorSet& op, const Vec& u) { return std::sqrt(std::max(0.0, u.dot(op.V * u))); }

void write_vertex_raster(const std::string& path, const MeshHierarchy& mesh, const Vec& dofs) {
  const Vec nodal = to_vertex_values(mesh, dofs);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write field file '" + path + "'");
  const int n = mesh.n_fine() + 1;
  out << n << ' ' << n << '\n';
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      out << fmt::format("{:.17g}", nodal[mesh.fine_vertex(ix, iy)]) << (ix + 1 < n ? ' ' : '\n');
    }
  }
}

}  // namespace cemdpg
