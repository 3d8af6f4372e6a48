#include "cemdpg/linalg.hpp"

#include <Eigen/UmfPackSupport>

#include <algorithm>

namespace cemdpg {

// UmfPackLU keeps pointers into the factored matrix, so the copy lives here.
struct SparseFactorization::Impl {
  SpMat matrix;
  Eigen::UmfPackLU<SpMat> lu;
};

SparseFactorization::SparseFactorization(const SpMat& matrix)
    : impl_(std::make_unique<Impl>()), size_(static_cast<int>(matrix.rows())) {
  if (matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("SparseFactorization: matrix is not square");
  }
  impl_->matrix = matrix;
  impl_->matrix.makeCompressed();
  impl_->lu.compute(impl_->matrix);
  if (impl_->lu.info() != Eigen::Success) {
    throw NumericalError("sparse LU failed (n = " + std::to_string(matrix.rows()) +
                         ", nnz = " + std::to_string(matrix.nonZeros()) + ")");
  }
}

SparseFactorization::~SparseFactorization() = default;
SparseFactorization::SparseFactorization(SparseFactorization&&) noexcept = default;
SparseFactorization& SparseFactorization::operator=(SparseFactorization&&) noexcept = default;

Vec SparseFactorization::solve(const Vec& rhs) const {
  Vec x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite()) {
    throw NumericalError("sparse LU solve failed");
  }
  return x;
}

Mat SparseFactorization::solve(const Mat& rhs) const {
  Mat x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite()) {
    throw NumericalError("sparse LU solve failed");
  }
  return x;
}

SpMat submatrix(const SpMat& m, std::span<const int> index) {
  std::vector<int> local(m.rows(), -1);
  for (std::size_t k = 0; k < index.size(); ++k) local[index[k]] = static_cast<int>(k);
  std::vector<Triplet> entries;
  for (std::size_t k = 0; k < index.size(); ++k) {
    for (SpMat::InnerIterator it(m, index[k]); it; ++it) {
      const int r = local[it.row()];
      if (r >= 0) entries.emplace_back(r, static_cast<int>(k), it.value());
    }
  }
  SpMat out(static_cast<int>(index.size()), static_cast<int>(index.size()));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

double symmetry_defect(const SpMat& m) {
  const SpMat diff = SpMat(m.transpose()) - m;
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SpMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  double scale = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  return scale > 0.0 ? worst / scale : worst;
}

int thread_count() {
  if (const char* env = std::getenv("CEMDPG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace cemdpg
