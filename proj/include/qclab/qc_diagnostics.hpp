#pragma once

#include <cstdint>
#include <vector>

#include "qclab/matrix_field.hpp"
#include "qclab/qc_map.hpp"

namespace qclab {

struct HolderReport {
  double alpha_hat = 0.0;
  double bound = 0.0;  // 1/K - 0.05
  Point worst;         // base point attaining alpha_hat
  std::vector<double> scales;
  bool pass = false;
};

/// Smallest log-log slope of the oscillation max_theta |phi(z0 + t e^{i theta}) - phi(z0)|
/// over dyadic t in [4h, r/2], minimized over the centre and n_points random
/// base points of B(center, r/2).
HolderReport holder_diagnostic(const QCMap& phi, double K, Point center, double r, int n_points = 64,
                               std::uint64_t seed = 1);

struct QuasisymmetryBin {
  double t_lo = 0.0, t_hi = 0.0;
  double eta = 0.0;  // max image ratio seen in the bin
  std::size_t count = 0;
};

struct QuasisymmetryReport {
  std::vector<QuasisymmetryBin> bins;
  bool finite = false;
  bool monotone = false;
  bool pass = false;
};

/// Random triples z0, z1, z2 in B(center, r); bins are dyadic in
/// t = |z0 - z1| / |z0 - z2| over [1/16, 16]. Monotone means eta never drops
/// by more than 10% from one populated bin to the next.
QuasisymmetryReport quasisymmetry_diagnostic(const QCMap& phi, int n_triples, std::uint64_t seed, Point center, double r);

struct ConjugateResult {
  RealField v;
  std::vector<std::uint8_t> mask;
  double max_curl = 0.0;       // max |loop integral| / h^2 over mask plaquettes
  double relative_curl = 0.0;  // max_curl * extent / max |*A grad u|
  double grad_error = 0.0;     // max |grad v - *A grad u| on interior mask nodes
};

/// v with grad v = *A grad u (* the rotation by +90 degrees) by trapezoidal
/// integration along a breadth-first tree of grid edges from the first mask
/// node. NotSimplyConnected when the mask has holes or several components;
/// CurlTooLarge when relative_curl exceeds curl_tol.
ConjugateResult harmonic_conjugate(const RealField& u, const MatrixField& a, const std::vector<std::uint8_t>& mask,
                                   double curl_tol = 0.05);

struct FactorizationReport {
  RealField composed;  // u o phi^-1 on the image grid
  double residual = 0.0;  // max |5-point Laplacian| over valid interior image nodes
  double h = 0.0;
  double C = 0.0;
  double operator_residual = 0.0;  // max |L_A u| on the source grid, for context
  std::size_t nodes = 0;
  bool pass = false;
};

/// Discrete Laplacian of u o phi^-1 on image_grid at nodes whose stencil maps
/// back into the interior of u's grid (two cells of margin).
FactorizationReport factorization_check(const RealField& u, const MatrixField& a, const QCMap& phi,
                                        const Grid2D& image_grid, double C = 1.0);

}  // namespace qclab
