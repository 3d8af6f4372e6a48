#pragma once

#include <array>
#include <string>
#include <vector>

#include "cemdpg/coeff.hpp"
#include "cemdpg/linalg.hpp"
#include "cemdpg/mesh.hpp"

namespace cemdpg {

/// Weight of the partition-of-unity term in c: kappa * sum|grad chi| or kappa * sum|grad chi|^2.
enum class KappaTilde : std::uint8_t { paper, squared };
/// Convection term as written (v b.grad u) or skew-symmetrized.
enum class Convection : std::uint8_t { direct, skew };

struct AssemblyOptions {
  KappaTilde kappa_tilde = KappaTilde::paper;
  Convection convection = Convection::direct;
};

/// Element matrices of one fine cell, row = test node, column = trial node.
using ElementMatrix = std::array<double, 16>;

/**
 * Fine-scale operators on the interior dofs.
 *
 * Matrix convention: A(m, n) = a(basis_n, basis_m), so rows index test
 * functions. The adjoint form a*(u, v) = a(v, u) is A^T.
 *
 * Element matrices are kept for every fine cell so that per-coarse-cell
 * blocks (on all fine vertices of the cell, boundary included) and
 * patch-local operators can be formed on demand.
 */
struct OperatorSet {
  MeshHierarchy mesh;
  AssemblyOptions options;

  SpMat A;
  SpMat At;
  SpMat S;
  SpMat C;
  SpMat V;  ///< S + C
  Vec B;    ///< row-sum lumped diagonal of C
  Vec F;
  SpMat Q;  ///< trial basis: interior coarse hats sampled at the dofs
  QuadratureValues kappa_tilde;

  std::vector<ElementMatrix> elem_stiffness;
  std::vector<ElementMatrix> elem_weight;
  std::vector<ElementMatrix> elem_operator;  ///< stiffness + convection

  [[nodiscard]] int num_dofs() const { return static_cast<int>(F.size()); }

  /// s^(i) on all (m+1)^2 fine vertices of coarse cell i (ordering of coarse_cell_vertices()).
  [[nodiscard]] Mat cell_stiffness(int cell) const;
  /// c^(i) on all (m+1)^2 fine vertices of coarse cell i.
  [[nodiscard]] Mat cell_weight(int cell) const;
};

OperatorSet assemble_all(const MeshHierarchy& mesh, const CoefficientField& field,
                         const QuadratureValues& source, const AssemblyOptions& options = {});

/// Interior coarse hats sampled on the dofs (dofs x N_c).
SpMat trial_matrix(const MeshHierarchy& mesh);

/// kappa * sum_j |grad chi_j| (or squared) at every quadrature point.
QuadratureValues kappa_tilde_field(const MeshHierarchy& mesh, const CoefficientField& field,
                                   KappaTilde variant);

enum class Operator : std::uint8_t { A, At, S, C, V };

/**
 * Operator restricted to the patch dofs, integrating only over the fine
 * cells of the patch. For zero-trace patches this is the submatrix of the
 * global operator; free-trace patches get the natural (Neumann) restriction.
 */
SpMat patch_restrict(const OperatorSet& op, const PatchIndexSet& patch, Operator which);

Vec restrict_vector(const Vec& global, const PatchIndexSet& patch);
Vec extend_vector(const Vec& local, const PatchIndexSet& patch, int num_dofs);

/// Sum over coarse cells of u_i^T (S_i + C_i) u_i, u extended by zero on the boundary.
double cellwise_v_energy(const OperatorSet& op, const Vec& u);

/// Global vector (interior dofs) extended to every fine vertex with zero boundary values.
Vec to_vertex_values(const MeshHierarchy& mesh, const Vec& dofs);

/// Coordinate-format export: "row col value" per line, 0-based.
void export_coordinate(const std::string& path, const SpMat& m);

}  // namespace cemdpg
