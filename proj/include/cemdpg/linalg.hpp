#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdlib>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cemdpg {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a factorization or solve breaks down.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse LU (UMFPACK) of a square matrix, factorized once and reused.
class SparseFactorization {
 public:
  explicit SparseFactorization(const SpMat& matrix);
  ~SparseFactorization();
  SparseFactorization(SparseFactorization&&) noexcept;
  SparseFactorization& operator=(SparseFactorization&&) noexcept;

  [[nodiscard]] Vec solve(const Vec& rhs) const;
  [[nodiscard]] Mat solve(const Mat& rhs) const;
  [[nodiscard]] int size() const { return size_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int size_ = 0;
};

/// Rows/columns `index` of `m` (both sorted ascending).
SpMat submatrix(const SpMat& m, std::span<const int> index);

[[nodiscard]] double symmetry_defect(const SpMat& m);

/// Worker count: CEMDPG_THREADS if set, else the hardware concurrency.
int thread_count();

/**
 * Runs fn(i) for i in [0, n) on thread_count() workers. Each index is handled
 * exactly once; results must be written to per-index slots. The first
 * exception thrown by any worker is rethrown on the caller.
 */
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cemdpg
