#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "cemdpg/mesh.hpp"

namespace cemdpg {

/// 2x2 Gauss rule on a fine cell. Point q sits at reference coordinates
/// (gauss[q & 1], gauss[q >> 1]) of the unit cell; every weight is 1/4.
struct Gauss2x2 {
  static constexpr double lo = 0.5 - 0.5 / 1.7320508075688772935;
  static constexpr double hi = 0.5 + 0.5 / 1.7320508075688772935;
  static constexpr std::array<double, 2> nodes{lo, hi};
  static constexpr double weight = 0.25;
  static constexpr int points = 4;

  static std::array<double, 2> reference(int q) { return {nodes[q & 1], nodes[q >> 1]}; }
  /// Physical location of point q in fine cell `cell`.
  static std::array<double, 2> point(const MeshHierarchy& mesh, int cell, int q);
};

using ScalarFunction = std::function<double(double, double)>;
using VectorFunction = std::function<std::array<double, 2>(double, double)>;

/// Values at the quadrature points of every fine cell, indexed 4*cell + q.
using QuadratureValues = std::vector<double>;

QuadratureValues sample_at_quadrature(const MeshHierarchy& mesh, const ScalarFunction& fn);

enum class FieldSource : std::uint8_t { analytic, raster, darcy };

std::string to_string(FieldSource source);

/**
 * Diffusion and velocity sampled at the fine quadrature points.
 */
struct CoefficientField {
  int n_fine = 0;
  QuadratureValues kappa;
  QuadratureValues bx;
  QuadratureValues by;
  FieldSource source = FieldSource::analytic;
  double kappa_min = 0.0;
  double kappa_max = 0.0;

  [[nodiscard]] double contrast() const { return kappa_max / kappa_min; }
  [[nodiscard]] std::size_t size() const { return kappa.size(); }
  /// Largest |b| over the quadrature points.
  [[nodiscard]] double max_speed() const;
};

/// Closed-form diffusion constant and divergence-free velocity.
struct AnalyticField {
  std::string name;
  double kappa = 1.0;
  VectorFunction velocity;
};

// The velocity formulas are templates so that tests can differentiate them
// with complex-step arithmetic.

/// b = (cos(18 pi y) sin(18 pi x), -cos(18 pi x) sin(18 pi y)).
template <class T>
std::array<T, 2> example1_velocity(T x, T y) {
  using std::cos, std::sin;
  const double w = 18.0 * std::numbers::pi;
  return {cos(w * y) * sin(w * x), -cos(w * x) * sin(w * y)};
}

/// b = (-dH/dy, dH/dx) for H = sin(5 pi x) sin(6 pi y) / (60 pi) + 0.005 (x + y).
template <class T>
std::array<T, 2> example2_velocity(T x, T y) {
  using std::cos, std::sin;
  const double pi = std::numbers::pi;
  // dH/dy = sin(5 pi x) cos(6 pi y) / 10 + 0.005, dH/dx = cos(5 pi x) sin(6 pi y) / 12 + 0.005
  return {-(sin(5.0 * pi * x) * cos(6.0 * pi * y) / 10.0 + 0.005),
          cos(5.0 * pi * x) * sin(6.0 * pi * y) / 12.0 + 0.005};
}

AnalyticField field_example1();
AnalyticField field_example2();

CoefficientField sample_field(const MeshHierarchy& mesh, const AnalyticField& field);

/// n_rows x n_cols positive values, row-major. Row 0 is the bottom (y = 0) row.
struct RasterField {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  [[nodiscard]] double at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols + c];
  }
  [[nodiscard]] double min() const;
  [[nodiscard]] double max() const;
  bool operator==(const RasterField&) const = default;
};

/// Checks dimensions and positivity, throws std::invalid_argument otherwise.
void validate(const RasterField& raster);

/// Nearest-neighbour value for every fine cell (cell-centre lookup).
std::vector<double> resample_to_fine_cells(const RasterField& raster, const MeshHierarchy& mesh);

/**
 * Seeded high-contrast permeability: background 1 with a handful of
 * meandering channels and rectangular inclusions at value `contrast`.
 */
RasterField generate_channelized_k(std::uint64_t seed, double contrast, int resolution = 200);

RasterField load_raster(const std::string& path);
void save_raster(const std::string& path, const RasterField& raster);

/// Source of the Darcy problem: +1 on [0,0.1]^2, -1 on [0.9,1]^2.
double darcy_source(double x, double y);
/// Right-hand side of the third example: 1 on [0,0.1]^2.
double corner_source(double x, double y);

struct DarcyVelocity {
  QuadratureValues bx;
  QuadratureValues by;
  /// Nodal pressure on every fine vertex (zero mean).
  std::vector<double> pressure;
};

/**
 * Solves -div(K grad p) = q with no-flux boundary and zero-mean pressure on
 * the fine grid and returns b = -K grad p at the quadrature points.
 */
DarcyVelocity darcy_velocity(const MeshHierarchy& mesh, const RasterField& permeability,
                             const ScalarFunction& source);

/// Velocity from the Darcy solve with constant kappa for the transport problem.
CoefficientField darcy_field(const MeshHierarchy& mesh, const RasterField& permeability,
                             const ScalarFunction& source, double kappa);

}  // namespace cemdpg
