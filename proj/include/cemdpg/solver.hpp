#pragma once

#include "cemdpg/assembly.hpp"
#include "cemdpg/linalg.hpp"
#include "cemdpg/testspace.hpp"

namespace cemdpg {

/// Metric replacing V^{-1} in the residual block: lumped c (default) or the exact V.
enum class Metric : std::uint8_t { lumped_c, full_v };

/// Direct solve of A u = F on the interior dofs.
Vec fine_solve(const OperatorSet& op);

struct Projection {
  Vec coefficients;  ///< trial coefficients of the V-orthogonal projection
  double abs_error = 0.0;
  double norm = 0.0;
  double rel_error = 0.0;
};

/// V-orthogonal projection of u onto range(Q).
Projection v_projection(const OperatorSet& op, const Vec& u);
double v_projection_error(const OperatorSet& op, const Vec& u);

/**
 * Reduced system [[R, G], [G^T, 0]] [w; u] = [rhs; 0] with
 * R = W^T A M^{-1} A^T W, G = W^T A Q, rhs = W^T F, M the metric matrix.
 */
struct SaddleSystem {
  Mat R;
  Mat G;
  Vec rhs;
};

SaddleSystem assemble_saddle(const OperatorSet& op, const SpMat& W, Metric metric = Metric::lumped_c);

struct SaddleSolution {
  Vec w;
  Vec u;
  int rank_G = 0;
  /// ||G^T w|| / (||G||_F ||w||); zero when w vanishes.
  double constraint_residual = 0.0;
  /// sqrt(w^T R w)
  double w_norm = 0.0;
  /// True when R was not numerically positive definite and the full block LU was used.
  bool block_fallback = false;
};

/// Throws NumericalError if G is rank deficient (test space too small for the trial space).
SaddleSolution solve_saddle(const SaddleSystem& system);
SaddleSolution solve_saddle(const OperatorSet& op, const TestSpace& space,
                            Metric metric = Metric::lumped_c);

/// Limit on dofs for the exact-V metric, which needs a dense V^{-1} A^T W.
inline constexpr int kFullMetricDofLimit = 20000;

}  // namespace cemdpg
