#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qclab/grid.hpp"

namespace qclab {

using Mat2 = Eigen::Matrix2d;
struct QCMap;

/// Grid samples of a real 2x2 coefficient matrix. Symmetry and constant
/// determinant are detected from the data (see detect_flags), never asserted.
struct MatrixField {
  Grid2D grid;
  std::vector<double> a11, a12, a21, a22;
  bool symmetric = false;
  bool const_det = false;

  MatrixField() = default;
  explicit MatrixField(const Grid2D& g);

  static MatrixField constant(const Grid2D& g, const Mat2& m);
  static MatrixField from_function(const Grid2D& g, const std::function<Mat2(Point)>& fn);

  Mat2 at(std::size_t k) const;
  Mat2 at(int i, int j) const { return at(grid.index(i, j)); }
  void set(std::size_t k, const Mat2& m);
  /// Bilinear interpolation, clamped to the grid.
  Mat2 eval(Point z) const;
  MatrixField transposed() const;

  void detect_flags();
};

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kDetTol = 1e-9;

/// Per-cell ellipticity: the smallest lambda with <A xi, xi> >= |xi|^2 / lambda
/// and |<A xi, eta>| <= lambda |xi||eta|.
double cell_lambda(const Mat2& a);
/// K from lambda: lambda for symmetric matrices, lambda + sqrt(lambda^2 - 1) otherwise.
double k_lambda(double lambda, bool symmetric);

struct EllipticityReport {
  double lambda_global = 1.0;
  RealField lambda_map;
  double K = 1.0;
  bool symmetric = true;
  /// max(1/min eig of A_s, 1/min eig of (A^-1)_s): the constant that controls
  /// |mu| + |nu| for non-symmetric matrices.
  double lambda_two_sided = 1.0;
  /// Distortion used for the coefficient bound (K for symmetric fields).
  double K_beltrami = 1.0;
};

/// Empty region means the whole grid.
EllipticityReport ellipticity_constant(const MatrixField& a, const std::vector<std::uint8_t>& region = {});

struct BeltramiField {
  ComplexField mu;
  ComplexField nu;
  double support_radius = 0.0;
  /// sup(|mu| + |nu|), the bound (K-1)/(K+1) it is compared with, and the verdict.
  double sup_sum = 0.0;
  double bound = 0.0;
  bool bound_holds = true;

  BeltramiField() = default;
  explicit BeltramiField(const Grid2D& g) : mu(g), nu(g) {}
  double sup_mu() const;
  void update_support();
};

BeltramiField beltrami_coefficients(const MatrixField& a);
/// mu and nu of a single matrix.
std::pair<Complex, Complex> beltrami_pair(const Mat2& a);

struct MuForSolution {
  BeltramiField field;
  std::size_t degenerate_cells = 0;
};

/// grad_u packs ux + i*uy on the matrix grid.
MuForSolution mu_for_solution(const MatrixField& a, const ComplexField& grad_u);

/// Symmetric det-1 interpolation between Id (cutoff 0) and A (cutoff 1).
MatrixField interpolate_det1(const MatrixField& a, const RealField& cutoff);
Mat2 interpolate_det1(const Mat2& a, double t);

Mat2 spd_sqrt(const Mat2& c);

struct FrozenField {
  MatrixField m;
  Mat2 c;
  Mat2 s;
  /// Entrywise sup |A - C| and the ellipticity of A.
  double eps = 0.0;
  double lambda = 1.0;
  /// (1 - 2 eps lambda)^-1.
  double bound = 1.0;
  Point xi_pulled;
  /// det of a symmetric constant-det source (0 otherwise); off-node samples
  /// are rescaled to it since bilinear interpolation does not keep det fixed.
  double det = 0.0;

  /// A at z, det-corrected as above.
  Mat2 source_at(Point z) const;
  /// Exact evaluation of Id + S^-T (A(S^T z) - C) S^-1.
  Mat2 value(Point z) const;
  std::shared_ptr<const MatrixField> source;
};

/// The returned grid is axis aligned with spacing h and covers (S^T)^-1 of
/// the source grid box; the pulled-back xi is a node.
FrozenField freeze_and_normalize(const MatrixField& a, Point xi);

struct PushforwardResult {
  MatrixField field;
  std::vector<std::uint8_t> singular;
  std::size_t singular_count = 0;
};

/// det Df Df^-1 A(f) Df^-T on f's source grid.
PushforwardResult pushforward_matrix(const MatrixField& a, const QCMap& f);

struct InverseSideMatrices {
  MatrixField b;
  MatrixField bstar;
};

/// B and B* composed with phi^-1, sampled on `image_grid`.
InverseSideMatrices inverse_side_matrices(const MatrixField& a, const QCMap& phi, const Grid2D& image_grid);
Mat2 inverse_side_b(const Mat2& a);
Mat2 inverse_side_bstar(const Mat2& a);

// Serialization: grid binary format with blocks a11, a12, a21, a22.
void write_matrix_field(const MatrixField& a, const std::string& path);
MatrixField read_matrix_field(const std::string& path);
void write_matrix_csv(const MatrixField& a, std::ostream& os);

}  // namespace qclab
