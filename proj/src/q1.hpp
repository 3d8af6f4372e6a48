#pragma once

#include <array>

namespace cemdpg::q1 {

// Bilinear shape functions on the reference cell [0,1]^2, local node order
// (0,0), (1,0), (0,1), (1,1).

inline std::array<double, 4> values(double s, double t) {
  return {(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
}

/// Reference-cell gradients; divide by the cell size for physical gradients.
inline std::array<std::array<double, 2>, 4> gradients(double s, double t) {
  return {{{-(1 - t), -(1 - s)}, {1 - t, -s}, {-t, 1 - s}, {t, s}}};
}

}  // namespace cemdpg::q1
