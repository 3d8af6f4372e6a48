#include <doctest.h>

#include <cmath>

#include "cemdpg/solver.hpp"
#include "cemdpg/spectral.hpp"
#include "cemdpg/testspace.hpp"
#include "fixtures.hpp"

using namespace cemdpg;

namespace {

struct Setup {
  OperatorSet op;
  AuxiliaryBasis aux;
};

Setup setup(int n_coarse, int m_refine, int j) {
  Setup s{fixtures::example1(n_coarse, m_refine), {}};
  s.aux = build_aux_space(s.op, j);
  return s;
}

double broken_distance(const PiOperator& pi, const BrokenField& a, const BrokenField& b) {
  BrokenField d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return std::sqrt(std::max(0.0, pi.c_inner(d, d)));
}

}  // namespace

TEST_CASE("pi is a c-orthogonal projection") {
  const Setup s = setup(3, 4, 3);
  const PiOperator pi(s.op, s.aux);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const Vec u = fixtures::random_vector(s.op.num_dofs(), seed);
    const Vec v = fixtures::random_vector(s.op.num_dofs(), 100 + seed);
    const BrokenField pu = pi.apply(u);
    const BrokenField ub = pi.broken(u);
    const double unorm = std::sqrt(pi.c_inner(ub, ub));

    CHECK(broken_distance(pi, pi.apply(pu), pu) <= 1e-10 * unorm);
    const double lhs = pi.c_inner(pu, pi.broken(v));
    const double rhs = pi.c_inner(ub, pi.apply(v));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs) + 1e-14);
    CHECK(pi.c_inner(pu, pu) <= pi.c_inner(ub, ub) * (1.0 + 1e-10));
  }
}

TEST_CASE("pi reproduces the auxiliary functions") {
  const Setup s = setup(3, 4, 2);
  const PiOperator pi(s.op, s.aux);
  const BrokenField phi = pi.aux_function(4, 1);
  CHECK(broken_distance(pi, pi.apply(phi), phi) <= 1e-10);
  CHECK(pi.c_inner(phi, phi) == doctest::Approx(1.0).epsilon(1e-10));
  // functional() is c(phi, .) on global vectors
  const Vec u = fixtures::random_vector(s.op.num_dofs(), 9);
  CHECK(pi.functional(4, 1).dot(u) == doctest::Approx(pi.c_inner(phi, pi.broken(u))).epsilon(1e-12));
}

TEST_CASE("inverse-lambda weights") {
  const Setup s = setup(3, 4, 3);
  // lambda_1 = 0 (constants) makes 1/lambda singular without a floor.
  CHECK_THROWS_AS(PiOperator(s.op, s.aux, PiMode::inverse_lambda, 0.0), std::invalid_argument);
  const PiOperator pi(s.op, s.aux, PiMode::inverse_lambda, 0.5);
  for (int i = 0; i < pi.num_cells(); ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(pi.weight(i, j) == doctest::Approx(1.0 / std::max(s.aux.cells[i].eigenvalues[j], 0.5)));
    }
  }
  CHECK_THROWS_AS(PiOperator(s.op, s.aux, PiMode::inverse_lambda, -1.0), std::invalid_argument);
}

TEST_CASE("psi solves its local problem") {
  const Setup s = setup(4, 3, 2);
  const PiOperator pi(s.op, s.aux);
  const int cell = s.op.mesh.coarse_cell(1, 2);
  const Vec psi = compute_psi(s.op, pi, cell, 1, 1);
  const PatchIndexSet patch = coarse_cell_patch(s.op.mesh, cell, 1);

  // a*(psi, v) + c(pi psi, pi v) = c(phi, pi v) for every v in the patch
  Vec residual = s.op.At * psi;
  for (int k : patch.coarse_cells()) {
    for (int j = 0; j < 2; ++j) {
      const Vec g = pi.functional(k, j);
      residual += g.dot(psi) * g;
    }
  }
  residual -= pi.functional(cell, 1);
  const Vec local = restrict_vector(residual, patch);
  CHECK(local.norm() <= 1e-10 * pi.functional(cell, 1).norm());
  CHECK(extend_vector(restrict_vector(psi, patch), patch, s.op.num_dofs()) == psi);
}

TEST_CASE("xi is the local adjoint lift of the trial stiffness") {
  const Setup s = setup(4, 3, 2);
  const int vertex = s.op.mesh.interior_coarse_vertex(2, 1);
  const Vec xi = compute_xi(s.op, vertex);
  const PatchIndexSet patch = vertex_neighborhood(s.op.mesh, vertex, 0);
  const Vec r = restrict_vector(s.op.At * xi - s.op.S * Vec(s.op.Q.col(vertex)), patch);
  CHECK(r.norm() <= 1e-10 * (s.op.S * Vec(s.op.Q.col(vertex))).norm());
  CHECK(restrict_vector(xi, patch).norm() == doctest::Approx(xi.norm()));
}

TEST_CASE("test space layout and supports") {
  const Setup s = setup(4, 3, 2);
  const PiOperator pi(s.op, s.aux);
  for (Trace trace : {Trace::zero, Trace::free}) {
    const TestSpace space = build_test_space(s.op, pi, {1, trace});
    CHECK(space.size() == 16 * 2 + 9);
    CHECK(space.num_spectral() == 32);
    CHECK(space.columns[5].entity == 2);
    CHECK(space.columns[5].aux_index == 1);
    CHECK(space.columns[33].kind == ColumnKind::trial);
    CHECK(space.columns[33].entity == 1);
    for (int k = 0; k < space.size(); ++k) CHECK(column_within_support(s.op, space, k));

    const Vec psi = compute_psi(s.op, pi, 2, 1, 1);
    CHECK((space.column(5) - psi).norm() <= 1e-12 * psi.norm());
    const Vec xi = compute_xi(s.op, 1);
    const Vec w = compute_eta(s.op, pi, 1, 1, xi, trace) + xi;
    CHECK((space.column(33) - w).norm() <= 1e-12 * w.norm());
  }
}

TEST_CASE("layers covering the domain reproduce the global space") {
  const Setup s = setup(4, 4, 2);
  const PiOperator pi(s.op, s.aux);
  const TestSpace local = build_test_space(s.op, pi, {4, Trace::zero});
  const TestSpace global = build_global_test_space(s.op, pi);
  REQUIRE(local.size() == global.size());
  for (int k = 0; k < local.size(); ++k) {
    const Vec g = global.column(k);
    CHECK(v_norm(s.op, local.column(k) - g) <= 1e-8 * v_norm(s.op, g));
  }
}

TEST_CASE("global space refuses large grids") {
  const Setup s = setup(3, 4, 1);
  const PiOperator pi(s.op, s.aux);
  CHECK_THROWS_AS(build_global_test_space(s.op, pi, 10), std::invalid_argument);
}

TEST_CASE("enlarging the test space cannot shrink the residual norm") {
  const Setup s = setup(4, 3, 2);
  const PiOperator pi(s.op, s.aux);
  const TestSpace small = build_test_space(s.op, pi, {1, Trace::zero});
  const TestSpace big = build_test_space(s.op, pi, {2, Trace::zero});
  SpMat both(small.W.rows(), small.W.cols() + big.W.cols());
  std::vector<Triplet> entries;
  for (const SpMat* m : {&small.W, &big.W}) {
    const int offset = m == &small.W ? 0 : static_cast<int>(small.W.cols());
    for (int k = 0; k < m->outerSize(); ++k) {
      for (SpMat::InnerIterator it(*m, k); it; ++it) entries.emplace_back(it.row(), offset + k, it.value());
    }
  }
  both.setFromTriplets(entries.begin(), entries.end());
  const double w_small = solve_saddle(assemble_saddle(s.op, small.W)).w_norm;
  const double w_both = solve_saddle(assemble_saddle(s.op, both)).w_norm;
  CHECK(w_both >= w_small * (1.0 - 1e-10));
}

TEST_CASE("v_norm") {
  const OperatorSet op = fixtures::example1(2, 3);
  const Vec u = fixtures::random_vector(op.num_dofs(), 4);
  CHECK(v_norm(op, u) == doctest::Approx(std::sqrt(u.dot(op.V * u))).epsilon(1e-12));
  CHECK(v_norm(op, u) == doctest::Approx(std::sqrt(cellwise_v_energy(op, u))).epsilon(1e-12));
}
