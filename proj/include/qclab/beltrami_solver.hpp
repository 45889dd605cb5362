#pragma once

#include <functional>
#include <memory>

#include "qclab/grid.hpp"
#include "qclab/matrix_field.hpp"
#include "qclab/qc_map.hpp"

namespace qclab {

/// Periodic Fourier multiplier with symbol conj(xi)/xi (zero at xi = 0) on a
/// square box grid. Isometric on fields of zero mean. Throws SupportTooLarge
/// when g is nonzero outside the middle half of the box.
ComplexField beurling_transform(const ComplexField& g);

/// Planar Beurling and Cauchy transforms of compactly supported data on a
/// square box grid. The total mass is carried by a Gaussian with closed-form
/// transforms; the mean-zero remainder goes through the periodic multipliers,
/// with the linear term of the periodic Cauchy kernel removed.
class PlanarTransforms {
 public:
  explicit PlanarTransforms(const Grid2D& box);
  ~PlanarTransforms();

  const Grid2D& grid() const { return grid_; }
  /// S g = d/dz of the Cauchy transform.
  void beurling(const std::vector<Complex>& g, std::vector<Complex>& out);
  /// C g(z) = (1/pi) int g(w) / (z - w) dA(w), so dbar C g = g and C g = O(1/z).
  void cauchy(const std::vector<Complex>& g, std::vector<Complex>& out);

 private:
  struct Impl;
  Grid2D grid_;
  std::unique_ptr<Impl> impl_;
};

enum class Sampling {
  /// Mean of s x s point values per cell.
  CellAverage,
  /// Cell means on a grid twice as fine, projected onto the Fourier modes of
  /// the box grid and cut to the middle half. Jumps of mu then cost about half
  /// the error of plain cell means in the principal solution.
  LowPass,
};

BeltramiField sample_beltrami(const Grid2D& box, const std::function<Complex(Point)>& mu, int supersample = 1,
                              Sampling mode = Sampling::CellAverage);

/// Principal solution phi = z + C omega of dbar phi = mu d phi, where
/// omega = mu (1 + S omega) is found by Neumann iteration starting at omega = mu.
/// tol bounds the relative residual |omega - mu (1 + S omega)| / |mu|.
QCMap principal_solution(const BeltramiField& mu, double tol = 1e-10, int max_iter = 500);

}  // namespace qclab
