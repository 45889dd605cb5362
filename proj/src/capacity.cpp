#include "qclab/capacity.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <cmath>

namespace qclab {

CapacityResult capacity(const std::vector<std::uint8_t>& k_mask, const std::vector<std::uint8_t>& omega_mask,
                        const Grid2D& grid) {
  const std::size_t n = grid.size();
  if (k_mask.size() != n || omega_mask.size() != n) throw Error(ErrorCode::DomainError, "mask sizes must match the grid");
  std::size_t nk = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!k_mask[k]) continue;
    ++nk;
    if (!omega_mask[k]) throw Error(ErrorCode::DomainError, "K must lie inside omega");
  }
  if (nk == 0) throw Error(ErrorCode::EmptyK, "no grid node in K");

  std::vector<int> unknown(n, -1);
  int nu = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (omega_mask[k] && !k_mask[k]) unknown[k] = nu++;

  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  // fixed values: 1 on K, 0 elsewhere off the unknowns (including off-grid)
  auto fixed = [&](int i, int j) { return grid.in_range(i, j) && k_mask[grid.index(i, j)] ? 1.0 : 0.0; };
  Eigen::VectorXd u_i;
  CapacityResult res;
  if (nu > 0) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(nu) * 5);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
    for (std::size_t k = 0; k < n; ++k) {
      const int row = unknown[k];
      if (row < 0) continue;
      const int i = static_cast<int>(k % grid.nx), j = static_cast<int>(k / grid.nx);
      t.emplace_back(row, row, 4.0);
      for (int d = 0; d < 4; ++d) {
        const int ii = i + di[d], jj = j + dj[d];
        const int col = grid.in_range(ii, jj) ? unknown[grid.index(ii, jj)] : -1;
        if (col >= 0)
          t.emplace_back(row, col, -1.0);
        else
          rhs[row] += fixed(ii, jj);
      }
    }
    Eigen::SparseMatrix<double> m(nu, nu);
    m.setFromTriplets(t.begin(), t.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::NaturalOrdering<int>>>
        cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(std::max(2000, nu / 10));
    cg.compute(m);
    u_i = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw Error(ErrorCode::SolverDiverged, "capacity solve did not converge");
    res.iterations = static_cast<int>(cg.iterations());
  }
  auto value = [&](int i, int j) {
    if (!grid.in_range(i, j)) return 0.0;
    const std::size_t k = grid.index(i, j);
    return unknown[k] >= 0 ? u_i[unknown[k]] : fixed(i, j);
  };
  // edges touching the free region or K; edges with both ends fixed at equal values contribute 0
  double e = 0.0;
  for (int j = -1; j < grid.ny; ++j)
    for (int i = -1; i < grid.nx; ++i) {
      const double v = value(i, j);
      const double dx = v - value(i + 1, j), dy = v - value(i, j + 1);
      e += dx * dx + dy * dy;
    }
  res.value = e;
  res.unknowns = static_cast<std::size_t>(nu);
  return res;
}

double ball_capacity(double r1, double r2, double h) {
  if (!(r1 > 0) || !(r2 > r1) || !(h > 0)) throw Error(ErrorCode::DomainError, "need 0 < r1 < r2 and h > 0");
  const int half = static_cast<int>(std::ceil(r2 / h)) + 1;
  Grid2D g;
  g.h = h;
  g.nx = g.ny = 2 * half + 1;
  g.origin = Point(-half * h, -half * h);
  std::vector<std::uint8_t> k(g.size(), 0), o(g.size(), 0);
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double d = std::abs(g.node(q));
    o[q] = d < r2;
    k[q] = d <= r1;
  }
  return capacity(k, o, g).value;
}

}  // namespace qclab
