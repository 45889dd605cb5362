#pragma once

#include <cstddef>
#include <vector>

#include "qclab/common.hpp"

namespace qclab {

/// Uniform node-centred grid. Node (i, j) sits at origin + (i*h, j*h);
/// storage is row-major with i running fastest.
struct Grid2D {
  Point origin{0.0, 0.0};
  double h = 1.0;
  int nx = 0;
  int ny = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  Point node(int i, int j) const { return origin + Point(i * h, j * h); }
  Point node(std::size_t k) const {
    return node(static_cast<int>(k % nx), static_cast<int>(k / nx));
  }
  Point upper() const { return node(nx - 1, ny - 1); }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  /// Fractional grid coordinates of a point.
  double fx(Point p) const { return (p.real() - origin.real()) / h; }
  double fy(Point p) const { return (p.imag() - origin.imag()) / h; }
  bool covers(Point p) const;

  /// Grid of spacing h with nodes at integer multiples of h covering [lo, hi]
  /// plus `margin` extra nodes on each side.
  static Grid2D covering(Point lo, Point hi, double h, int margin);
  /// Square periodic-box grid [-side/2, side/2)^2 with n nodes per axis.
  static Grid2D box(double side, int n);

  bool operator==(const Grid2D&) const = default;
};

/// Scalar or complex samples on a grid.
template <typename T>
struct Field {
  Grid2D grid;
  std::vector<T> values;

  Field() = default;
  explicit Field(const Grid2D& g, T fill = T{}) : grid(g), values(g.size(), fill) {}

  T& operator()(int i, int j) { return values[grid.index(i, j)]; }
  const T& operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

/// Bilinear interpolation, clamped to the grid.
double bilinear(const RealField& f, Point p);
Complex bilinear(const ComplexField& f, Point p);

/// Catmull-Rom bicubic interpolation, clamped to the grid. Reproduces
/// quadratics exactly.
double bicubic(const RealField& f, Point p);
Complex bicubic(const ComplexField& f, Point p);

/// Gradient packed as ux + i*uy: central differences inside, one-sided at
/// the grid edge.
ComplexField gradient(const RealField& u);

/// Wirtinger derivatives of a complex field with the same stencils.
ComplexField d_z(const ComplexField& f);
ComplexField d_zbar(const ComplexField& f);

}  // namespace qclab
