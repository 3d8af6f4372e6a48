#pragma once

#include <random>

#include "cemdpg/assembly.hpp"
#include "cemdpg/coeff.hpp"
#include "cemdpg/mesh.hpp"

namespace fixtures {

inline cemdpg::AnalyticField constant_field(double kappa, double bx, double by) {
  return {"constant", kappa, [bx, by](double, double) { return std::array<double, 2>{bx, by}; }};
}

inline cemdpg::OperatorSet operators(const cemdpg::MeshHierarchy& mesh,
                                     const cemdpg::AnalyticField& field,
                                     cemdpg::AssemblyOptions options = {}) {
  return cemdpg::assemble_all(mesh, cemdpg::sample_field(mesh, field),
                              cemdpg::sample_at_quadrature(mesh, [](double, double) { return 1.0; }),
                              options);
}

inline cemdpg::OperatorSet example1(int n_coarse, int m_refine) {
  return operators(cemdpg::MeshHierarchy(n_coarse, m_refine), cemdpg::field_example1());
}

inline cemdpg::Vec random_vector(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  cemdpg::Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

}  // namespace fixtures
