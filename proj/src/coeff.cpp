#include "cemdpg/coeff.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "cemdpg/linalg.hpp"
#include "q1.hpp"

namespace cemdpg {

std::array<double, 2> Gauss2x2::point(const MeshHierarchy& mesh, int cell, int q) {
  const auto [ix, iy] = mesh.fine_cell_coords(cell);
  const auto [s, t] = reference(q);
  return {(ix + s) * mesh.h(), (iy + t) * mesh.h()};
}

QuadratureValues sample_at_quadrature(const MeshHierarchy& mesh, const ScalarFunction& fn) {
  QuadratureValues out(static_cast<std::size_t>(mesh.num_fine_cells()) * Gauss2x2::points);
  for (int c = 0; c < mesh.num_fine_cells(); ++c) {
    for (int q = 0; q < Gauss2x2::points; ++q) {
      const auto [x, y] = Gauss2x2::point(mesh, c, q);
      out[4 * c + q] = fn(x, y);
    }
  }
  return out;
}

std::string to_string(FieldSource source) {
  switch (source) {
    case FieldSource::analytic: return "analytic";
    case FieldSource::raster: return "raster";
    case FieldSource::darcy: return "darcy";
  }
  return "unknown";
}

double CoefficientField::max_speed() const {
  double best = 0.0;
  for (std::size_t k = 0; k < bx.size(); ++k) best = std::max(best, std::hypot(bx[k], by[k]));
  return best;
}

AnalyticField field_example1() {
  return {"ex1", 1.0 / 200.0, [](double x, double y) { return example1_velocity(x, y); }};
}

AnalyticField field_example2() {
  return {"ex2", 1.0 / 2000.0, [](double x, double y) { return example2_velocity(x, y); }};
}

CoefficientField sample_field(const MeshHierarchy& mesh, const AnalyticField& field) {
  if (!(field.kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  CoefficientField out;
  out.n_fine = mesh.n_fine();
  const std::size_t n = static_cast<std::size_t>(mesh.num_fine_cells()) * Gauss2x2::points;
  out.kappa.assign(n, field.kappa);
  out.bx.resize(n);
  out.by.resize(n);
  for (int c = 0; c < mesh.num_fine_cells(); ++c) {
    for (int q = 0; q < Gauss2x2::points; ++q) {
      const auto [x, y] = Gauss2x2::point(mesh, c, q);
      const auto b = field.velocity(x, y);
      out.bx[4 * c + q] = b[0];
      out.by[4 * c + q] = b[1];
    }
  }
  out.source = FieldSource::analytic;
  out.kappa_min = out.kappa_max = field.kappa;
  return out;
}

// ---------------------------------------------------------------------------
// Rasters

double RasterField::min() const { return *std::min_element(values.begin(), values.end()); }
double RasterField::max() const { return *std::max_element(values.begin(), values.end()); }

void validate(const RasterField& raster) {
  if (raster.rows <= 0 || raster.cols <= 0) {
    throw std::invalid_argument("raster: dimensions must be positive");
  }
  if (raster.values.size() != static_cast<std::size_t>(raster.rows) * raster.cols) {
    throw std::invalid_argument(fmt::format("raster: expected {} values, got {}",
                                            raster.rows * raster.cols, raster.values.size()));
  }
  for (double v : raster.values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("raster: non-positive value {}", v));
    }
  }
}

std::vector<double> resample_to_fine_cells(const RasterField& raster, const MeshHierarchy& mesh) {
  validate(raster);
  const int n = mesh.n_fine();
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int iy = 0; iy < n; ++iy) {
    // integer form of floor((iy + 0.5) / n * rows), exact for all sizes
    const int r = std::min(raster.rows - 1, static_cast<int>((2L * iy + 1) * raster.rows / (2L * n)));
    for (int ix = 0; ix < n; ++ix) {
      const int c = std::min(raster.cols - 1, static_cast<int>((2L * ix + 1) * raster.cols / (2L * n)));
      out[mesh.fine_cell(ix, iy)] = raster.at(r, c);
    }
  }
  return out;
}

namespace {

// Portable uniform draw in [lo, hi): 53 random bits from the raw engine
// output, independent of the standard library's distribution code.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace

RasterField generate_channelized_k(std::uint64_t seed, double contrast, int resolution) {
  if (!(contrast >= 1.0) || !std::isfinite(contrast)) {
    throw std::invalid_argument(fmt::format("contrast must be >= 1 (got {})", contrast));
  }
  if (resolution < 4) throw std::invalid_argument("raster resolution must be >= 4");
  RasterField k{resolution, resolution,
                std::vector<double>(static_cast<std::size_t>(resolution) * resolution, 1.0)};
  std::mt19937_64 rng(seed);
  auto mark = [&](int r, int c) { k.values[static_cast<std::size_t>(r) * resolution + c] = contrast; };

  // Meandering channels spanning the square, alternating orientation.
  const int channels = 3 + static_cast<int>(rng() % 2);
  for (int ch = 0; ch < channels; ++ch) {
    const bool horizontal = ch % 2 == 0;
    const double offset = uniform(rng, 0.15, 0.85);
    const double amplitude = uniform(rng, 0.03, 0.12);
    const double frequency = uniform(rng, 0.5, 2.0);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double half_width = uniform(rng, 0.008, 0.016);
    for (int r = 0; r < resolution; ++r) {
      for (int c = 0; c < resolution; ++c) {
        const double along = ((horizontal ? c : r) + 0.5) / resolution;
        const double across = ((horizontal ? r : c) + 0.5) / resolution;
        const double centre =
            offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency * along + phase);
        if (std::abs(across - centre) <= half_width) mark(r, c);
      }
    }
  }

  // Isolated rectangular inclusions.
  const int inclusions = 8 + static_cast<int>(rng() % 5);
  for (int in = 0; in < inclusions; ++in) {
    const double x0 = uniform(rng, 0.0, 0.95);
    const double y0 = uniform(rng, 0.0, 0.95);
    const double wx = uniform(rng, 0.015, 0.05);
    const double wy = uniform(rng, 0.015, 0.05);
    for (int r = 0; r < resolution; ++r) {
      const double y = (r + 0.5) / resolution;
      if (y < y0 || y > y0 + wy) continue;
      for (int c = 0; c < resolution; ++c) {
        const double x = (c + 0.5) / resolution;
        if (x >= x0 && x <= x0 + wx) mark(r, c);
      }
    }
  }
  return k;
}

RasterField load_raster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open raster file '" + path + "'");
  RasterField raster;
  if (!(in >> raster.rows >> raster.cols)) {
    throw std::runtime_error("raster '" + path + "': missing 'n_rows n_cols' header");
  }
  if (raster.rows <= 0 || raster.cols <= 0) {
    throw std::runtime_error("raster '" + path + "': dimensions must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(raster.rows) * raster.cols;
  raster.values.reserve(n);
  double v = 0.0;
  while (raster.values.size() < n && in >> v) raster.values.push_back(v);
  if (raster.values.size() != n) {
    throw std::runtime_error(fmt::format("raster '{}': expected {} values, read {}", path, n,
                                         raster.values.size()));
  }
  validate(raster);
  return raster;
}

void save_raster(const std::string& path, const RasterField& raster) {
  validate(raster);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write raster file '" + path + "'");
  out << raster.rows << ' ' << raster.cols << '\n';
  for (int r = 0; r < raster.rows; ++r) {
    for (int c = 0; c < raster.cols; ++c) {
      out << fmt::format("{:.17g}", raster.at(r, c)) << (c + 1 < raster.cols ? ' ' : '\n');
    }
  }
}

// ---------------------------------------------------------------------------
// Darcy velocity

double darcy_source(double x, double y) {
  if (x <= 0.1 && y <= 0.1) return 1.0;
  if (x >= 0.9 && y >= 0.9) return -1.0;
  return 0.0;
}

double corner_source(double x, double y) { return x <= 0.1 && y <= 0.1 ? 1.0 : 0.0; }

DarcyVelocity darcy_velocity(const MeshHierarchy& mesh, const RasterField& permeability,
                             const ScalarFunction& source) {
  const std::vector<double> k_cell = resample_to_fine_cells(permeability, mesh);
  const int nv = mesh.num_fine_vertices();
  const double h = mesh.h();
  const double area_weight = h * h * Gauss2x2::weight;

  Vec load = Vec::Zero(nv);
  Vec mass = Vec::Zero(nv);
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(mesh.num_fine_cells()) * 16 + 2 * nv);
  for (int c = 0; c < mesh.num_fine_cells(); ++c) {
    const auto vs = mesh.fine_cell_vertices(c);
    double ke[4][4] = {};
    for (int q = 0; q < Gauss2x2::points; ++q) {
      const auto [s, t] = Gauss2x2::reference(q);
      const auto phi = q1::values(s, t);
      const auto grad = q1::gradients(s, t);
      const auto [x, y] = Gauss2x2::point(mesh, c, q);
      const double f = source(x, y);
      for (int a = 0; a < 4; ++a) {
        load[vs[a]] += area_weight * f * phi[a];
        mass[vs[a]] += area_weight * phi[a];
        for (int b = 0; b < 4; ++b) {
          // gradients scale by 1/h, area by h^2: h cancels in 2D
          ke[a][b] += Gauss2x2::weight * k_cell[c] *
                      (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
        }
      }
    }
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) entries.emplace_back(vs[a], vs[b], ke[a][b]);
    }
  }

  const double total = load.sum();
  if (std::abs(total) > 1e-12) {
    throw std::invalid_argument(
        fmt::format("darcy: source integrates to {:.3e}; no-flux problem needs zero total", total));
  }

  // Zero-mean pressure through one Lagrange multiplier.
  for (int v = 0; v < nv; ++v) {
    entries.emplace_back(v, nv, mass[v]);
    entries.emplace_back(nv, v, mass[v]);
  }
  SpMat system(nv + 1, nv + 1);
  system.setFromTriplets(entries.begin(), entries.end());
  Vec rhs = Vec::Zero(nv + 1);
  rhs.head(nv) = load;

  Vec solution;
  try {
    solution = SparseFactorization(system).solve(rhs);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("darcy pressure solve did not converge: ") + e.what());
  }

  DarcyVelocity out;
  out.pressure.assign(solution.data(), solution.data() + nv);
  const std::size_t nq = static_cast<std::size_t>(mesh.num_fine_cells()) * Gauss2x2::points;
  out.bx.resize(nq);
  out.by.resize(nq);
  for (int c = 0; c < mesh.num_fine_cells(); ++c) {
    const auto vs = mesh.fine_cell_vertices(c);
    for (int q = 0; q < Gauss2x2::points; ++q) {
      const auto [s, t] = Gauss2x2::reference(q);
      const auto grad = q1::gradients(s, t);
      double gx = 0.0;
      double gy = 0.0;
      for (int a = 0; a < 4; ++a) {
        gx += grad[a][0] * out.pressure[vs[a]];
        gy += grad[a][1] * out.pressure[vs[a]];
      }
      out.bx[4 * c + q] = -k_cell[c] * gx / h;
      out.by[4 * c + q] = -k_cell[c] * gy / h;
    }
  }
  return out;
}

CoefficientField darcy_field(const MeshHierarchy& mesh, const RasterField& permeability,
                             const ScalarFunction& source, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  DarcyVelocity velocity = darcy_velocity(mesh, permeability, source);
  CoefficientField out;
  out.n_fine = mesh.n_fine();
  out.kappa.assign(velocity.bx.size(), kappa);
  out.bx = std::move(velocity.bx);
  out.by = std::move(velocity.by);
  out.source = FieldSource::darcy;
  out.kappa_min = out.kappa_max = kappa;
  return out;
}

}  // namespace cemdpg
