#include "qclab/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace qclab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::NotSPD: return "NotSPD";
    case ErrorCode::PerturbationTooLarge: return "PerturbationTooLarge";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotContractive: return "NotContractive";
    case ErrorCode::FoldDetected: return "FoldDetected";
    case ErrorCode::NotSimplyConnected: return "NotSimplyConnected";
    case ErrorCode::CurlTooLarge: return "CurlTooLarge";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::DisconnectedInterior: return "DisconnectedInterior";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::EmptyK: return "EmptyK";
    case ErrorCode::NoInteriorPole: return "NoInteriorPole";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::BadR0: return "BadR0";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InsufficientScales: return "InsufficientScales";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::LevelTooDeep: return "LevelTooDeep";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IncompleteBundle: return "IncompleteBundle";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
  }
  return "Unknown";
}

bool Grid2D::covers(Point p) const {
  const double x = fx(p);
  const double y = fy(p);
  return x >= 0.0 && y >= 0.0 && x <= nx - 1 && y <= ny - 1;
}

Grid2D Grid2D::covering(Point lo, Point hi, double h, int margin) {
  const int i0 = static_cast<int>(std::floor(lo.real() / h)) - margin;
  const int j0 = static_cast<int>(std::floor(lo.imag() / h)) - margin;
  const int i1 = static_cast<int>(std::ceil(hi.real() / h)) + margin;
  const int j1 = static_cast<int>(std::ceil(hi.imag() / h)) + margin;
  Grid2D g;
  g.origin = Point(i0 * h, j0 * h);
  g.h = h;
  g.nx = i1 - i0 + 1;
  g.ny = j1 - j0 + 1;
  return g;
}

Grid2D Grid2D::box(double side, int n) {
  Grid2D g;
  g.h = side / n;
  g.origin = Point(-side / 2, -side / 2);
  g.nx = n;
  g.ny = n;
  return g;
}

namespace {

template <typename T>
T bilinear_impl(const Field<T>& f, Point p) {
  const Grid2D& g = f.grid;
  double x = std::clamp(g.fx(p), 0.0, static_cast<double>(g.nx - 1));
  double y = std::clamp(g.fy(p), 0.0, static_cast<double>(g.ny - 1));
  int i = std::min(static_cast<int>(x), g.nx - 2);
  int j = std::min(static_cast<int>(y), g.ny - 2);
  i = std::max(i, 0);
  j = std::max(j, 0);
  const double tx = x - i;
  const double ty = y - j;
  const T v00 = f(i, j), v10 = f(i + 1, j), v01 = f(i, j + 1), v11 = f(i + 1, j + 1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

std::array<double, 4> catmull_rom_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {(-t3 + 2 * t2 - t) * 0.5, (3 * t3 - 5 * t2 + 2) * 0.5, (-3 * t3 + 4 * t2 + t) * 0.5,
          (t3 - t2) * 0.5};
}

template <typename T>
T bicubic_impl(const Field<T>& f, Point p) {
  const Grid2D& g = f.grid;
  if (g.nx < 4 || g.ny < 4) return bilinear_impl(f, p);
  double x = std::clamp(g.fx(p), 0.0, static_cast<double>(g.nx - 1));
  double y = std::clamp(g.fy(p), 0.0, static_cast<double>(g.ny - 1));
  int i = std::clamp(static_cast<int>(std::floor(x)), 1, g.nx - 3);
  int j = std::clamp(static_cast<int>(std::floor(y)), 1, g.ny - 3);
  const auto wx = catmull_rom_weights(x - i);
  const auto wy = catmull_rom_weights(y - j);
  T acc{};
  for (int b = 0; b < 4; ++b) {
    T row{};
    for (int a = 0; a < 4; ++a) row += wx[a] * f(i - 1 + a, j - 1 + b);
    acc += wy[b] * row;
  }
  return acc;
}

}  // namespace

double bilinear(const RealField& f, Point p) { return bilinear_impl(f, p); }
Complex bilinear(const ComplexField& f, Point p) { return bilinear_impl(f, p); }
double bicubic(const RealField& f, Point p) { return bicubic_impl(f, p); }
Complex bicubic(const ComplexField& f, Point p) { return bicubic_impl(f, p); }

namespace {

template <typename T>
void partials(const Field<T>& f, int i, int j, T& dx, T& dy) {
  const Grid2D& g = f.grid;
  const double h = g.h;
  if (i == 0) dx = (f(1, j) - f(0, j)) / h;
  else if (i == g.nx - 1) dx = (f(i, j) - f(i - 1, j)) / h;
  else dx = (f(i + 1, j) - f(i - 1, j)) / (2 * h);
  if (j == 0) dy = (f(i, 1) - f(i, 0)) / h;
  else if (j == g.ny - 1) dy = (f(i, j) - f(i, j - 1)) / h;
  else dy = (f(i, j + 1) - f(i, j - 1)) / (2 * h);
}

}  // namespace

ComplexField gradient(const RealField& u) {
  ComplexField out(u.grid);
  for (int j = 0; j < u.grid.ny; ++j)
    for (int i = 0; i < u.grid.nx; ++i) {
      double dx = 0, dy = 0;
      partials(u, i, j, dx, dy);
      out(i, j) = Complex(dx, dy);
    }
  return out;
}

ComplexField d_z(const ComplexField& f) {
  ComplexField out(f.grid);
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) {
      Complex dx, dy;
      partials(f, i, j, dx, dy);
      out(i, j) = 0.5 * (dx - Complex(0, 1) * dy);
    }
  return out;
}

ComplexField d_zbar(const ComplexField& f) {
  ComplexField out(f.grid);
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) {
      Complex dx, dy;
      partials(f, i, j, dx, dy);
      out(i, j) = 0.5 * (dx + Complex(0, 1) * dy);
    }
  return out;
}

}  // namespace qclab
