#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "cemdpg/coeff.hpp"
#include "cemdpg/linalg.hpp"
#include "fixtures.hpp"

using namespace cemdpg;
using cplx = std::complex<double>;

namespace {

constexpr double kStep = 1e-30;

// Divergence by complex-step differentiation: exact to rounding, no truncation error.
template <class Velocity>
double divergence(Velocity velocity, double x, double y) {
  const auto bx = velocity(cplx(x, kStep), cplx(y, 0.0));
  const auto by = velocity(cplx(x, 0.0), cplx(y, kStep));
  return bx[0].imag() / kStep + by[1].imag() / kStep;
}

// Stream function of the second example's velocity.
cplx stream2(cplx x, cplx y) {
  const double pi = std::numbers::pi;
  return std::sin(5.0 * pi * x) * std::sin(6.0 * pi * y) / (60.0 * pi) + 0.005 * (x + y);
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("gauss rule integrates bicubics exactly") {
  double sum = 0.0;
  for (int q = 0; q < Gauss2x2::points; ++q) {
    const auto [s, t] = Gauss2x2::reference(q);
    sum += Gauss2x2::weight * std::pow(s, 3) * std::pow(t, 2);
  }
  CHECK(sum == doctest::Approx(1.0 / 12.0).epsilon(1e-14));

  const MeshHierarchy mesh(2, 2);
  const auto p = Gauss2x2::point(mesh, mesh.fine_cell(1, 2), 3);
  CHECK(p[0] == doctest::Approx((1.0 + Gauss2x2::hi) / 4.0));
  CHECK(p[1] == doctest::Approx((2.0 + Gauss2x2::hi) / 4.0));
}

TEST_CASE("analytic velocities are divergence free") {
  for (double x : {0.013, 0.27, 0.5, 0.81}) {
    for (double y : {0.004, 0.33, 0.61, 0.99}) {
      CHECK(std::abs(divergence([](auto a, auto b) { return example1_velocity(a, b); }, x, y)) < 1e-12);
      CHECK(std::abs(divergence([](auto a, auto b) { return example2_velocity(a, b); }, x, y)) < 1e-12);
    }
  }
}

TEST_CASE("second velocity is the rotated gradient of its stream function") {
  for (double x : {0.1, 0.45, 0.77}) {
    for (double y : {0.2, 0.52, 0.9}) {
      const double dhdx = stream2(cplx(x, kStep), y).imag() / kStep;
      const double dhdy = stream2(x, cplx(y, kStep)).imag() / kStep;
      const auto b = example2_velocity(x, y);
      CHECK(b[0] == doctest::Approx(-dhdy).epsilon(1e-13));
      CHECK(b[1] == doctest::Approx(dhdx).epsilon(1e-13));
    }
  }
}

TEST_CASE("sampled analytic field") {
  const MeshHierarchy mesh(3, 2);
  const CoefficientField f = sample_field(mesh, field_example1());
  CHECK(f.size() == static_cast<std::size_t>(4 * mesh.num_fine_cells()));
  CHECK(f.kappa_min == doctest::Approx(1.0 / 200.0));
  CHECK(f.contrast() == doctest::Approx(1.0));
  const auto [x, y] = Gauss2x2::point(mesh, 7, 2);
  const auto b = example1_velocity(x, y);
  CHECK(f.bx[4 * 7 + 2] == b[0]);
  CHECK(f.by[4 * 7 + 2] == b[1]);
  CHECK(sample_field(mesh, field_example2()).kappa_max == doctest::Approx(1.0 / 2000.0));
  CHECK_THROWS_AS(sample_field(mesh, fixtures::constant_field(0.0, 1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("raster validation and round trip") {
  RasterField r{2, 3, {1.0, 2.5, 3.0, 1e4, 0.125, 7.0}};
  CHECK_NOTHROW(validate(r));
  CHECK(r.at(1, 0) == 1e4);
  const std::string path = temp_path("cemdpg_raster_roundtrip.txt");
  save_raster(path, r);
  CHECK(load_raster(path) == r);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(validate(RasterField{2, 2, {1.0, 1.0, 0.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(RasterField{2, 2, {1.0, 1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS(load_raster(temp_path("cemdpg_missing_raster.txt")));
}

TEST_CASE("nearest-neighbour resampling") {
  // 2x2 raster onto a 4x4 fine grid: each raster cell covers a 2x2 block.
  const RasterField r{2, 2, {1.0, 2.0, 3.0, 4.0}};
  const MeshHierarchy mesh(2, 2);
  const auto k = resample_to_fine_cells(r, mesh);
  for (int iy = 0; iy < 4; ++iy) {
    for (int ix = 0; ix < 4; ++ix) CHECK(k[mesh.fine_cell(ix, iy)] == r.at(iy / 2, ix / 2));
  }
  // Finer raster than grid: the cell-centre sample.
  const RasterField fine{8, 8, [] {
                           std::vector<double> v(64);
                           for (int i = 0; i < 64; ++i) v[i] = 1.0 + i;
                           return v;
                         }()};
  const auto k2 = resample_to_fine_cells(fine, mesh);
  CHECK(k2[mesh.fine_cell(0, 0)] == fine.at(1, 1));
  CHECK(k2[mesh.fine_cell(3, 2)] == fine.at(5, 7));
}

TEST_CASE("channelized permeability generator") {
  const RasterField k = generate_channelized_k(42, 1e4);
  CHECK(k.rows == 200);
  CHECK(k.min() == 1.0);
  CHECK(k.max() == 1e4);
  CHECK(k.max() / k.min() == doctest::Approx(1e4));
  CHECK(generate_channelized_k(42, 1e4) == k);
  CHECK_FALSE(generate_channelized_k(43, 1e4) == k);
  std::size_t high = 0;
  for (double v : k.values) high += v > 1.0;
  const double fraction = static_cast<double>(high) / k.values.size();
  CHECK(fraction > 0.02);
  CHECK(fraction < 0.5);
  CHECK_THROWS_AS(generate_channelized_k(1, 0.5), std::invalid_argument);
}

TEST_CASE("darcy velocity satisfies the weak mass balance") {
  const MeshHierarchy mesh(4, 5);
  const RasterField k = generate_channelized_k(7, 100.0, 40);
  const DarcyVelocity v = darcy_velocity(mesh, k, darcy_source);

  // For every fine vertex: int b.grad(phi) = -int q phi, with bilinear phi
  // and the same quadrature points, written out independently here.
  const double h = mesh.h();
  const int n = mesh.n_fine();
  double worst = 0.0;
  double scale = 0.0;
  std::vector<double> balance(mesh.num_fine_vertices(), 0.0);
  for (int cy = 0; cy < n; ++cy) {
    for (int cx = 0; cx < n; ++cx) {
      const int c = mesh.fine_cell(cx, cy);
      for (int q = 0; q < 4; ++q) {
        const double s = Gauss2x2::nodes[q & 1];
        const double t = Gauss2x2::nodes[q >> 1];
        const double x = (cx + s) * h;
        const double y = (cy + t) * h;
        const double f = darcy_source(x, y);
        const double w = h * h / 4.0;
        for (int a = 0; a < 4; ++a) {
          const int ax = a & 1;
          const int ay = a >> 1;
          const double phi = (ax ? s : 1 - s) * (ay ? t : 1 - t);
          const double gx = (ax ? 1.0 : -1.0) * (ay ? t : 1 - t) / h;
          const double gy = (ay ? 1.0 : -1.0) * (ax ? s : 1 - s) / h;
          const double flux = v.bx[4 * c + q] * gx + v.by[4 * c + q] * gy;
          balance[mesh.fine_vertex(cx + ax, cy + ay)] += w * (flux + f * phi);
          scale = std::max(scale, std::abs(w * f * phi));
        }
      }
    }
  }
  for (double b : balance) worst = std::max(worst, std::abs(b));
  CHECK(worst <= 1e-8 * std::max(1.0, scale));

  double mean = 0.0;
  for (double p : v.pressure) mean += p;
  CHECK(std::abs(mean / v.pressure.size()) < 1e-3);
}

TEST_CASE("darcy rejects a source with nonzero total") {
  const MeshHierarchy mesh(2, 5);
  const RasterField k{1, 1, {1.0}};
  CHECK_THROWS_AS(darcy_velocity(mesh, k, corner_source), std::invalid_argument);
}

TEST_CASE("darcy field on uniform permeability is symmetric about the diagonal") {
  const MeshHierarchy mesh(2, 5);
  const CoefficientField f = darcy_field(mesh, RasterField{1, 1, {1.0}}, darcy_source, 0.05);
  CHECK(f.source == FieldSource::darcy);
  CHECK(f.kappa_min == 0.05);
  CHECK(f.max_speed() > 0.0);
  // Mirror (x, y) -> (y, x) swaps the velocity components.
  const int n = mesh.n_fine();
  for (int cy = 0; cy < n; ++cy) {
    for (int cx = 0; cx < n; ++cx) {
      for (int q = 0; q < 4; ++q) {
        const int qt = ((q & 1) << 1) | (q >> 1);
        const double bx = f.bx[4 * mesh.fine_cell(cx, cy) + q];
        const double by_mirror = f.by[4 * mesh.fine_cell(cy, cx) + qt];
        CHECK(bx == doctest::Approx(by_mirror).epsilon(1e-9).scale(1.0));
      }
    }
  }
}
