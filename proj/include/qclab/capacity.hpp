#pragma once

#include <cstdint>
#include <vector>

#include "qclab/grid.hpp"

namespace qclab {

struct CapacityResult {
  double value = 0.0;
  std::size_t unknowns = 0;
  int iterations = 0;
};

/// Discrete condenser capacity: the minimal sum over grid edges of
/// (u_i - u_j)^2 with u = 1 on K and u = 0 off omega, found by one linear
/// solve for the equilibrium potential. The sum approximates the Dirichlet
/// integral of |grad u|^2 independently of h.
CapacityResult capacity(const std::vector<std::uint8_t>& k_mask, const std::vector<std::uint8_t>& omega_mask,
                        const Grid2D& grid);

/// Cap(closed B(c, r1), B(c, r2)) on a grid of spacing h.
double ball_capacity(double r1, double r2, double h);

}  // namespace qclab
