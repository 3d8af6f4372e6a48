#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cemdpg/assembly.hpp"
#include "cemdpg/linalg.hpp"
#include "cemdpg/mesh.hpp"
#include "cemdpg/spectral.hpp"

namespace cemdpg {

/**
 * Weighting of the projection onto the auxiliary space.
 *
 * plain: pi u = sum_i sum_j c^(i)(u, phi_j) phi_j, the c-orthogonal projection.
 * inverse_lambda: every term is additionally scaled by 1 / max(lambda_j, floor).
 */
enum class PiMode : std::uint8_t { plain, inverse_lambda };

/// Cellwise (possibly discontinuous) function: values on the (m+1)^2 fine vertices of each coarse cell.
using BrokenField = std::vector<Vec>;

class PiOperator {
 public:
  PiOperator(const OperatorSet& op, const AuxiliaryBasis& aux, PiMode mode = PiMode::plain,
             double floor = 0.0);

  [[nodiscard]] PiMode mode() const { return mode_; }
  [[nodiscard]] int num_cells() const { return static_cast<int>(cells_.size()); }
  [[nodiscard]] int j_per_cell() const { return j_per_cell_; }

  /// pi of a global (interior dof) vector.
  [[nodiscard]] BrokenField apply(const Vec& u) const;
  [[nodiscard]] BrokenField apply(const BrokenField& u) const;
  /// Cellwise restriction of a global vector (zero on the boundary of the square).
  [[nodiscard]] BrokenField broken(const Vec& u) const;
  /// sum_i c^(i)(u_i, v_i).
  [[nodiscard]] double c_inner(const BrokenField& u, const BrokenField& v) const;
  /// Auxiliary function phi_j^(i) as a broken field (zero outside cell i).
  [[nodiscard]] BrokenField aux_function(int cell, int j) const;

  /// Global vector g with g.v = c^(i)(phi_j^(i), v) for every dof vector v.
  [[nodiscard]] Vec functional(int cell, int j) const;
  /// Weight 1 (plain) or 1/max(lambda, floor) of aux function j of a cell.
  [[nodiscard]] double weight(int cell, int j) const { return cells_[cell].weights[j]; }
  /// C_i phi^(i) (cell vertices x J).
  [[nodiscard]] const Mat& weighted_basis(int cell) const { return cells_[cell].c_basis; }
  /// Global dof of each vertex of the cell (-1 on the boundary of the square).
  [[nodiscard]] const std::vector<int>& cell_dofs(int cell) const { return cells_[cell].dofs; }

 private:
  struct Cell {
    Mat basis;
    Mat c_basis;
    SpMat weight;
    Vec weights;
    std::vector<int> dofs;
  };
  PiMode mode_;
  int j_per_cell_;
  int num_dofs_;
  std::vector<Cell> cells_;
};

/// Which penalty a local problem carries.
enum class PenaltyForm : std::uint8_t {
  none,
  /// c(pi u, pi v): squared weights.
  projected_both,
  /// c(pi u, v): single weights.
  projected_left,
};

/**
 * Factorized local problem (A^T + P)|patch for one patch, where P is the
 * low-rank penalty sum_k pw_k u_k u_k^T over the aux functions of the
 * patch's cells. The penalty is carried as a bordered block so the sparse
 * factorization never sees the dense cell blocks.
 */
class PatchSolver {
 public:
  PatchSolver(const OperatorSet& op, PatchIndexSet patch, const PiOperator* pi, PenaltyForm form);

  [[nodiscard]] const PatchIndexSet& patch() const { return patch_; }
  /// Solves for the local dofs; rhs is indexed like patch().dofs().
  [[nodiscard]] Vec solve(const Vec& rhs) const;
  [[nodiscard]] Mat solve(const Mat& rhs) const;
  /// Local matrix without the border, for residual checks.
  [[nodiscard]] const SpMat& adjoint_block() const { return adjoint_; }

 private:
  PatchIndexSet patch_;
  SpMat adjoint_;
  int border_ = 0;
  std::optional<SparseFactorization> lu_;
};

struct TestSpaceOptions {
  int layers = 3;
  Trace eta_space = Trace::zero;
};

enum class ColumnKind : std::uint8_t { spectral, trial };

struct TestColumn {
  ColumnKind kind = ColumnKind::spectral;
  /// Coarse cell (spectral) or interior coarse vertex (trial).
  int entity = 0;
  /// Aux function index within the cell; 0 for trial columns.
  int aux_index = 0;
  int layers = 0;
  CellBox support;
  Trace trace = Trace::zero;
};

struct TestSpace {
  /// dofs x n_test; spectral columns first (cells row-major, aux index fastest),
  /// then trial-derived columns (vertices row-major).
  SpMat W;
  std::vector<TestColumn> columns;

  [[nodiscard]] int size() const { return static_cast<int>(columns.size()); }
  [[nodiscard]] int num_spectral() const;
  [[nodiscard]] Vec column(int k) const { return Vec(W.col(k)); }
};

Vec compute_psi(const OperatorSet& op, const PiOperator& pi, int cell, int j, int layers);
Vec compute_xi(const OperatorSet& op, int vertex);
Vec compute_eta(const OperatorSet& op, const PiOperator& pi, int vertex, int layers,
                const Vec& xi, Trace space = Trace::zero);

TestSpace build_test_space(const OperatorSet& op, const PiOperator& pi,
                           const TestSpaceOptions& options);

inline constexpr int kDefaultGlobalDofLimit = 5000;

/**
 * Test space from global solves (no localization). Guarded by a dof limit
 * since every column needs a solve on the whole fine grid.
 */
TestSpace build_global_test_space(const OperatorSet& op, const PiOperator& pi,
                                  int max_dofs = kDefaultGlobalDofLimit);

/// True if every nonzero of column k lies in its declared support patch.
bool column_within_support(const OperatorSet& op, const TestSpace& space, int k);

double v_norm(const OperatorSet& op, const Vec& u);

/// Plain-text raster of a dof vector on the fine vertices (boundary zeros included).
void write_vertex_raster(const std::string& path, const MeshHierarchy& mesh, const Vec& dofs);

}  // namespace cemdpg
