#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qclab/grid.hpp"
#include "qclab/matrix_field.hpp"

namespace qclab {

class InverseSampler;

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  /// Geometric mean of successive residual ratios.
  double contraction = 0.0;
};

/// Grid samples of a quasiconformal map together with its derivatives.
/// Off-grid evaluation interpolates the displacement phi(z) - z bicubically,
/// so the map is exact for the identity and accurate for z + O(1/z).
struct QCMap {
  Grid2D grid;
  ComplexField forward;
  RealField jacobian;
  ComplexField dphi;     // d phi / dz
  ComplexField dbarphi;  // d phi / dzbar
  BeltramiField beltrami;
  double K = 1.0;
  std::string normalization = "principal";
  SolveReport report;

  /// Builds derivatives by finite differences of the samples.
  static QCMap from_samples(const Grid2D& g, ComplexField forward);
  static QCMap from_function(const Grid2D& g, const std::function<Point(Point)>& fn);
  static QCMap identity(const Grid2D& g);

  Point operator()(Point z) const;
  /// Real 2x2 differential at z (bilinear in the derivative samples).
  Mat2 differential(Point z) const;
  Mat2 differential(std::size_t k) const;

  /// Fraction of interior nodes with positive Jacobian.
  double positive_jacobian_fraction() const;

  const InverseSampler& inverse() const;

 private:
  ComplexField displacement_;
  mutable std::shared_ptr<const InverseSampler> inverse_;
  void finish();
  friend class InverseSampler;
  friend QCMap make_qcmap(const Grid2D&, ComplexField, ComplexField, ComplexField);
};

/// Assembles a map from samples and exact derivative samples.
QCMap make_qcmap(const Grid2D& g, ComplexField forward, ComplexField dphi, ComplexField dbarphi);

/// Inverse of a grid map. The grid triangulation (two triangles per cell) is
/// pushed forward; a query is located in its image triangle, interpolated
/// linearly and refined by Newton steps against the forward interpolant.
class InverseSampler {
 public:
  explicit InverseSampler(const QCMap& phi);

  Point operator()(Point w) const;
  bool in_image(Point w) const;
  std::size_t triangle_count() const { return tri_count_; }

 private:
  QCMap phi_;  // private copy without its own inverse
  Grid2D grid_;
  std::size_t tri_count_ = 0;
  Point lo_, hi_;
  double cell_ = 1.0;
  int bx_ = 1, by_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> items_;

  bool locate(Point w, Point& z) const;
  void triangle(std::size_t t, int& i0, int& j0, int& i1, int& j1, int& i2, int& j2) const;
};

/// Builds the inverse sampler and checks every image triangle is positively
/// oriented (FoldDetected otherwise).
const InverseSampler& invert_map(const QCMap& phi);

/// Grid file with blocks fwd_re, fwd_im, jacobian, dz_re, dz_im, dzbar_re,
/// dzbar_im and flags K, normalization.
void write_qcmap(const QCMap& phi, const std::string& path, const std::map<std::string, std::string>& extra_flags = {});
QCMap read_qcmap(const std::string& path);

/// Samples phi^-1 on a grid of the image plane as a map in its own right.
QCMap inverse_as_map(const QCMap& phi, const Grid2D& image_grid);

}  // namespace qclab
