#include "cemdpg/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <fmt/format.h>

namespace cemdpg {

Vec fine_solve(const OperatorSet& op) {
  const double fnorm = op.F.norm();
  if (fnorm == 0.0) return Vec::Zero(op.num_dofs());
  Vec u;
  try {
    u = SparseFactorization(op.A).solve(op.F);
  } catch (const NumericalError& e) {
    throw NumericalError(fmt::format("fine solve: {} (n = {}, nnz = {})", e.what(),
                                     op.A.rows(), op.A.nonZeros()));
  }
  const double residual = (op.A * u - op.F).norm() / fnorm;
  if (!(residual <= 1e-10)) {
    throw NumericalError(fmt::format("fine solve: relative residual {:.3e} above 1e-10", residual));
  }
  return u;
}

Projection v_projection(const OperatorSet& op, const Vec& u) {
  const SpMat vq = op.V * op.Q;
  const Mat gram = Mat(SpMat(op.Q.transpose()) * vq);
  Eigen::LLT<Mat> chol(gram);
  if (chol.info() != Eigen::Success) {
    throw NumericalError("projection: trial Gram matrix is singular");
  }
  Projection p;
  p.coefficients = chol.solve(vq.transpose() * u);
  const Vec diff = u - op.Q * p.coefficients;
  p.abs_error = v_norm(op, diff);
  p.norm = v_norm(op, u);
  p.rel_error = p.norm > 0.0 ? p.abs_error / p.norm : 0.0;
  return p;
}

double v_projection_error(const OperatorSet& op, const Vec& u) { return v_projection(op, u).rel_error; }

namespace {

// R = Y^T diag(d) Y for sparse Y, accumulated row by row into a dense matrix.
Mat weighted_gram(const SpMat& y, const Vec& d) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor, int> rows = y;
  const int n = static_cast<int>(y.cols());
  Mat r = Mat::Zero(n, n);
  for (int k = 0; k < rows.outerSize(); ++k) {
    const int begin = rows.outerIndexPtr()[k];
    const int end = rows.outerIndexPtr()[k + 1];
    const int* idx = rows.innerIndexPtr();
    const double* val = rows.valuePtr();
    for (int b = begin; b < end; ++b) {
      const double yb = val[b] * d[k];
      double* colb = r.col(idx[b]).data();
      for (int a = begin; a <= b; ++a) colb[idx[a]] += val[a] * yb;
    }
  }
  r.triangularView<Eigen::StrictlyLower>() = r.transpose().triangularView<Eigen::StrictlyLower>();
  return r;
}

}  // namespace

SaddleSystem assemble_saddle(const OperatorSet& op, const SpMat& W, Metric metric) {
  if (W.rows() != op.num_dofs()) throw std::invalid_argument("saddle: W has wrong row count");
  const SpMat y = op.At * W;
  SaddleSystem sys;
  if (metric == Metric::lumped_c) {
    sys.R = weighted_gram(y, op.B.cwiseInverse());
  } else {
    if (op.num_dofs() > kFullMetricDofLimit) {
      throw std::invalid_argument(fmt::format(
          "saddle: full_v metric limited to {} dofs (have {})", kFullMetricDofLimit, op.num_dofs()));
    }
    Eigen::SimplicialLLT<SpMat> chol(op.V);
    if (chol.info() != Eigen::Success) throw NumericalError("saddle: V is not positive definite");
    const Mat yd = Mat(y);
    const Mat z = chol.solve(yd);
    sys.R = yd.transpose() * z;
    sys.R = 0.5 * (sys.R + sys.R.transpose()).eval();
  }
  sys.G = Mat(SpMat(y.transpose()) * op.Q);
  sys.rhs = W.transpose() * op.F;
  return sys;
}

SaddleSolution solve_saddle(const SaddleSystem& sys) {
  const int nt = static_cast<int>(sys.R.rows());
  const int nc = static_cast<int>(sys.G.cols());
  if (sys.R.cols() != nt || sys.G.rows() != nt || sys.rhs.size() != nt) {
    throw std::invalid_argument("saddle: inconsistent block sizes");
  }
  SaddleSolution sol;
  const double gnorm = sys.G.norm();

  Eigen::LLT<Mat> chol(sys.R);
  if (chol.info() == Eigen::Success) {
    // Schur complement as a least-squares problem: with R = L L^T,
    // X = L^{-1} G and z = L^{-1} rhs, u minimizes ||X u - z||.
    const auto lower = chol.matrixL();
    const Mat x = lower.solve(sys.G);
    const Vec z = lower.solve(sys.rhs);
    Eigen::ColPivHouseholderQR<Mat> qr(x);
    qr.setThreshold(1e-12);
    sol.rank_G = static_cast<int>(qr.rank());
    if (sol.rank_G < nc) {
      throw NumericalError(fmt::format(
          "saddle: G has rank {} < {} trial functions; enlarge the test space (more aux "
          "functions or layers)",
          sol.rank_G, nc));
    }
    sol.u = qr.solve(z);
    sol.w = chol.matrixU().solve(Vec(z - x * sol.u));
  } else {
    Eigen::ColPivHouseholderQR<Mat> gqr(sys.G);
    gqr.setThreshold(1e-12);
    sol.rank_G = static_cast<int>(gqr.rank());
    if (sol.rank_G < nc) {
      throw NumericalError(fmt::format("saddle: G has rank {} < {} trial functions",
                                       sol.rank_G, nc));
    }
    Mat block = Mat::Zero(nt + nc, nt + nc);
    block.topLeftCorner(nt, nt) = sys.R;
    block.topRightCorner(nt, nc) = sys.G;
    block.bottomLeftCorner(nc, nt) = sys.G.transpose();
    Vec rhs = Vec::Zero(nt + nc);
    rhs.head(nt) = sys.rhs;
    Eigen::FullPivLU<Mat> lu(block);
    if (!lu.isInvertible()) throw NumericalError("saddle: block system is singular");
    const Vec x = lu.solve(rhs);
    sol.w = x.head(nt);
    sol.u = x.tail(nc);
    sol.block_fallback = true;
  }
  const double wn = sol.w.norm();
  sol.constraint_residual = wn > 0.0 && gnorm > 0.0 ? (sys.G.transpose() * sol.w).norm() / (gnorm * wn) : 0.0;
  sol.w_norm = std::sqrt(std::max(0.0, sol.w.dot(sys.R * sol.w)));
  return sol;
}

SaddleSolution solve_saddle(const OperatorSet& op, const TestSpace& space, Metric metric) {
  return solve_saddle(assemble_saddle(op, space.W, metric));
}

}  // namespace cemdpg
