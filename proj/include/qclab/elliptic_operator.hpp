#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "qclab/domain.hpp"
#include "qclab/matrix_field.hpp"

namespace qclab {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct LinearSolveStats {
  int iterations = 0;
  double residual = 0.0;  // relative
};

/// Finite-volume discretization of -div(A grad u) on the grid nodes of a
/// domain. Nodes sit at integer multiples of h. Axis links use the harmonic
/// mean of a11 (resp. a22) at their ends; a link that leaves the domain is cut
/// at the boundary crossing and gets the coefficient a/theta, theta the
/// crossing fraction (clamped below by 0.05). Mixed terms come from the cell
/// gradients of each 2x2 plaquette, with outside corners replaced by their
/// closest boundary point. The result is the stiffness matrix M = h^2 L_h
/// split into interior and boundary columns, and M(A^T) = M(A)^T.
class EllipticProblem {
 public:
  EllipticProblem(const MatrixField& a, const DomainSpec& omega, double h);

  const Grid2D& grid() const;
  const DomainSpec& domain() const;
  double h() const { return grid().h; }
  bool symmetric() const;

  std::size_t interior_count() const;
  std::size_t boundary_count() const;
  /// Interior unknown of a grid node, or -1.
  int unknown(std::size_t node) const;
  std::size_t node_of(std::size_t unknown) const;
  const std::vector<BoundaryLocation>& boundary() const;

  const SparseMatrix& m_ii() const;
  const SparseMatrix& m_ib() const;

  /// M_II x = rhs and M_II^T x = rhs to relative residual 1e-10.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd solve_adjoint(const Eigen::VectorXd& rhs) const;
  const LinearSolveStats& last_stats() const;

  /// Interior values for boundary data f (exterior nodes carry f at their
  /// closest boundary point so the field interpolates sensibly).
  RealField dirichlet(const std::function<double(const BoundaryLocation&)>& f) const;
  Eigen::VectorXd boundary_values(const std::function<double(const BoundaryLocation&)>& f) const;
  RealField to_field(const Eigen::VectorXd& interior, double exterior = 0.0) const;

  /// Bilinear weights of p on the four surrounding nodes, all of which must be
  /// interior (DomainError otherwise).
  std::vector<std::pair<int, double>> pole_weights(Point p) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// (1/h^2) M u at nodes whose plaquettes all lie in the grid, zero elsewhere:
/// the discrete -div(A grad u) of a grid function with no boundary cuts.
RealField apply_operator(const MatrixField& a, const RealField& u);

}  // namespace qclab
