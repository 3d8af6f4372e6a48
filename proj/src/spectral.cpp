#include "cemdpg/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace cemdpg {

CellEigenpairs solve_pencil(const Mat& stiffness, const Mat& weight, int j_count) {
  const int n = static_cast<int>(stiffness.rows());
  if (j_count < 1 || j_count >= n) {
    throw std::invalid_argument(
        fmt::format("eigen: need 1 <= J < cell dof count {} (got J = {})", n, j_count));
  }
  Eigen::LLT<Mat> chol(weight);
  if (chol.info() != Eigen::Success) {
    throw NumericalError("eigen: cell weight matrix is not positive definite (degenerate kappa or b)");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(stiffness, weight,
                                                        Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen: generalized solver failed");

  CellEigenpairs out;
  out.eigenvalues = solver.eigenvalues().head(j_count + 1);
  out.vectors = solver.eigenvectors().leftCols(j_count);
  // Sign convention: first clearly nonzero component positive.
  for (int j = 0; j < j_count; ++j) {
    auto col = out.vectors.col(j);
    const double tol = 1e-8 * col.cwiseAbs().maxCoeff();
    for (int k = 0; k < n; ++k) {
      if (std::abs(col[k]) > tol) {
        if (col[k] < 0) col = -col;
        break;
      }
    }
  }
  return out;
}

CellEigenpairs solve_cell_eigen(const OperatorSet& op, int cell, int j_count) {
  if (cell < 0 || cell >= op.mesh.num_coarse_cells()) {
    throw std::out_of_range(fmt::format("eigen: cell {} out of range", cell));
  }
  try {
    return solve_pencil(op.cell_stiffness(cell), op.cell_weight(cell), j_count);
  } catch (const NumericalError& e) {
    throw NumericalError(fmt::format("cell {}: {}", cell, e.what()));
  }
}

AuxiliaryBasis build_aux_space(const OperatorSet& op, int j_per_cell) {
  AuxiliaryBasis aux;
  aux.j_per_cell = j_per_cell;
  const int n = op.mesh.num_coarse_cells();
  aux.cells.resize(n);
  parallel_for(n, [&](int i) { aux.cells[i] = solve_cell_eigen(op, i, j_per_cell); });
  aux.lambda_excluded_min = std::numeric_limits<double>::infinity();
  for (const auto& c : aux.cells) {
    aux.lambda_excluded_min = std::min(aux.lambda_excluded_min, c.first_excluded());
  }
  return aux;
}

void write_eigenvalues_csv(const std::string& path, const AuxiliaryBasis& aux) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write eigenvalue file '" + path + "'");
  out << "cell";
  for (int j = 1; j <= aux.j_per_cell + 1; ++j) out << ",lambda_" << j;
  out << '\n';
  for (std::size_t i = 0; i < aux.cells.size(); ++i) {
    out << i;
    for (int j = 0; j < aux.cells[i].eigenvalues.size(); ++j) {
      out << fmt::format(",{:.17g}", aux.cells[i].eigenvalues[j]);
    }
    out << '\n';
  }
}

}  // namespace cemdpg
