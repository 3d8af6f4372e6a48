#pragma once

#include <string>
#include <vector>

#include "cemdpg/assembly.hpp"
#include "cemdpg/linalg.hpp"

namespace cemdpg {

/// Smallest eigenpairs of s^(i)(phi, v) = lambda c^(i)(phi, v) on one coarse cell.
struct CellEigenpairs {
  /// J+1 smallest eigenvalues, ascending; the last one is the first excluded.
  Vec eigenvalues;
  /// (m+1)^2 x J, c-orthonormal, ordered like coarse_cell_vertices().
  Mat vectors;

  [[nodiscard]] int count() const { return static_cast<int>(vectors.cols()); }
  [[nodiscard]] double first_excluded() const { return eigenvalues[eigenvalues.size() - 1]; }
};

CellEigenpairs solve_cell_eigen(const OperatorSet& op, int cell, int j_count);

/// Dense pencil variant, used by solve_cell_eigen and directly by tests.
CellEigenpairs solve_pencil(const Mat& stiffness, const Mat& weight, int j_count);

struct AuxiliaryBasis {
  int j_per_cell = 0;
  std::vector<CellEigenpairs> cells;
  /// min over cells of the first excluded eigenvalue.
  double lambda_excluded_min = 0.0;

  [[nodiscard]] int dimension() const { return j_per_cell * static_cast<int>(cells.size()); }
};

AuxiliaryBasis build_aux_space(const OperatorSet& op, int j_per_cell);

/// "cell,lambda_1,...,lambda_{J+1}" rows.
void write_eigenvalues_csv(const std::string& path, const AuxiliaryBasis& aux);

}  // namespace cemdpg
