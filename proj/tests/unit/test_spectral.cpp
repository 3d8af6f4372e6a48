#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "cemdpg/spectral.hpp"
#include "fixtures.hpp"

using namespace cemdpg;

namespace {

// Reference eigenvalues through the symmetric reduction C^{-1/2} S C^{-1/2}.
Vec reference_eigenvalues(const Mat& s, const Mat& c) {
  Eigen::SelfAdjointEigenSolver<Mat> ce(c);
  const Mat half_inv = ce.eigenvectors() * ce.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                       ce.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Mat> e(half_inv * s * half_inv);
  return e.eigenvalues();
}

}  // namespace

TEST_CASE("cell eigenpairs against a dense reference") {
  // 5x5 fine vertices per coarse cell, kappa = 1, b = (1, 0).
  const OperatorSet op = fixtures::operators(MeshHierarchy(3, 4), fixtures::constant_field(1.0, 1.0, 0.0));
  for (int cell : {0, 4}) {
    const Mat s = op.cell_stiffness(cell);
    const Mat c = op.cell_weight(cell);
    const CellEigenpairs pairs = solve_cell_eigen(op, cell, 4);
    const Vec ref = reference_eigenvalues(s, c);
    REQUIRE(pairs.eigenvalues.size() == 5);
    for (int j = 0; j < 5; ++j) {
      CHECK(pairs.eigenvalues[j] == doctest::Approx(ref[j]).epsilon(1e-10).scale(1.0));
    }
    CHECK(std::abs(pairs.eigenvalues[0]) < 1e-10);  // constants
    CHECK(pairs.first_excluded() == pairs.eigenvalues[4]);

    const Mat& phi = pairs.vectors;
    const Mat gram = phi.transpose() * c * phi;
    CHECK((gram - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int j = 0; j < 4; ++j) {
      const Vec residual = s * phi.col(j) - pairs.eigenvalues[j] * (c * phi.col(j));
      CHECK(residual.norm() <= 1e-9 * std::max(1.0, (s * phi.col(j)).norm()));
    }
  }
}

TEST_CASE("eigenvector sign convention") {
  const OperatorSet op = fixtures::example1(2, 4);
  const CellEigenpairs pairs = solve_cell_eigen(op, 1, 3);
  for (int j = 0; j < pairs.count(); ++j) {
    const Vec v = pairs.vectors.col(j);
    const double tol = 1e-8 * v.cwiseAbs().maxCoeff();
    int first = 0;
    while (std::abs(v[first]) <= tol) ++first;
    CHECK(v[first] > 0.0);
  }
}

TEST_CASE("pencil argument checks") {
  const Mat s = Mat::Identity(4, 4);
  CHECK_THROWS_AS(solve_pencil(s, s, 0), std::invalid_argument);
  CHECK_THROWS_AS(solve_pencil(s, s, 4), std::invalid_argument);
  Mat bad = Mat::Identity(4, 4);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(solve_pencil(s, bad, 2), NumericalError);
  CHECK_THROWS_AS(solve_cell_eigen(fixtures::example1(2, 3), 9, 1), std::out_of_range);
}

TEST_CASE("pencil with known spectrum") {
  // Diagonal pencil: lambda_k = s_k / c_k.
  Mat s = Mat::Zero(4, 4);
  Mat c = Mat::Zero(4, 4);
  const double sv[4] = {3.0, 0.0, 8.0, 1.0};
  const double cv[4] = {1.0, 2.0, 2.0, 4.0};
  for (int k = 0; k < 4; ++k) {
    s(k, k) = sv[k];
    c(k, k) = cv[k];
  }
  const CellEigenpairs p = solve_pencil(s, c, 2);
  CHECK(p.eigenvalues[0] == doctest::Approx(0.0));
  CHECK(p.eigenvalues[1] == doctest::Approx(0.25));
  CHECK(p.eigenvalues[2] == doctest::Approx(3.0));
  CHECK(std::abs(p.vectors(1, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(p.vectors(3, 1)) == doctest::Approx(0.5));
}

TEST_CASE("auxiliary basis over the grid") {
  const OperatorSet op = fixtures::example1(3, 4);
  const AuxiliaryBasis aux = build_aux_space(op, 3);
  CHECK(aux.dimension() == 27);
  double lam = 1e300;
  for (const auto& c : aux.cells) {
    CHECK(c.count() == 3);
    lam = std::min(lam, c.first_excluded());
  }
  CHECK(aux.lambda_excluded_min == lam);
  CHECK(lam > 0.0);

  const auto path = (std::filesystem::temp_directory_path() / "cemdpg_eigs.csv").string();
  write_eigenvalues_csv(path, aux);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "cell,lambda_1,lambda_2,lambda_3,lambda_4");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 9);
  std::filesystem::remove(path);
}
