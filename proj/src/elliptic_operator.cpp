#include "qclab/elliptic_operator.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>

namespace qclab {

namespace {

constexpr double kThetaMin = 0.05;
constexpr double kSolveTol = 1e-10;

using CG = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                    Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::NaturalOrdering<int>>>;
using BiCG = Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>;

double harmonic(double a, double b) { return a + b > 0 ? 2.0 * a * b / (a + b) : 0.0; }

// corner order (i,j), (i+1,j), (i,j+1), (i+1,j+1)
constexpr int kSx[4] = {-1, 1, -1, 1};
constexpr int kSy[4] = {-1, -1, 1, 1};

bool has_mixed(const MatrixField& a) {
  for (std::size_t k = 0; k < a.a12.size(); ++k)
    if (a.a12[k] != 0.0 || a.a21[k] != 0.0) return true;
  return false;
}

}  // namespace

struct EllipticProblem::Impl {
  Grid2D grid;
  DomainSpec omega;
  bool symmetric = true;
  std::vector<int> unknown;  // per node: >= 0 interior, -1 otherwise
  std::vector<std::size_t> nodes;
  std::vector<BoundaryLocation> boundary;
  SparseMatrix m_ii, m_ib, m_ii_t;

  std::mutex mu;
  std::unique_ptr<CG> cg;
  std::unique_ptr<BiCG> bicg, bicg_t;
  LinearSolveStats stats;

  Eigen::VectorXd run(const Eigen::VectorXd& rhs, bool adjoint);
};

Eigen::VectorXd EllipticProblem::Impl::run(const Eigen::VectorXd& rhs, bool adjoint) {
  std::lock_guard<std::mutex> lock(mu);
  if (rhs.size() == 0) return rhs;
  if (rhs.norm() == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd x;
  Eigen::ComputationInfo info;
  if (symmetric) {
    if (!cg) {
      cg = std::make_unique<CG>();
      cg->setTolerance(kSolveTol);
      cg->setMaxIterations(std::max<int>(2000, static_cast<int>(4 * std::sqrt(double(m_ii.rows())) * 10)));
      cg->compute(m_ii);
      if (cg->info() != Eigen::Success) throw Error(ErrorCode::SolverDiverged, "incomplete Cholesky failed");
    }
    x = cg->solve(rhs);
    info = cg->info();
    stats = {static_cast<int>(cg->iterations()), cg->error()};
  } else {
    auto& s = adjoint ? bicg_t : bicg;
    if (!s) {
      if (adjoint) m_ii_t = m_ii.transpose();
      s = std::make_unique<BiCG>();
      s->preconditioner().setDroptol(1e-4);
      s->preconditioner().setFillfactor(10);
      s->setTolerance(kSolveTol);
      s->setMaxIterations(std::max<int>(2000, static_cast<int>(m_ii.rows() / 10)));
      s->compute(adjoint ? m_ii_t : m_ii);
      if (s->info() != Eigen::Success) throw Error(ErrorCode::SolverDiverged, "incomplete LU failed");
    }
    x = s->solve(rhs);
    info = s->info();
    stats = {static_cast<int>(s->iterations()), s->error()};
  }
  if (info != Eigen::Success || !std::isfinite(stats.residual) || stats.residual > 10 * kSolveTol)
    throw Error(ErrorCode::SolverDiverged,
                "relative residual " + std::to_string(stats.residual) + " after " + std::to_string(stats.iterations) + " iterations");
  return x;
}

EllipticProblem::EllipticProblem(const MatrixField& a, const DomainSpec& omega, double h)
    : impl_(std::make_shared<Impl>()) {
  if (!(h > 0)) throw Error(ErrorCode::DomainError, "grid spacing must be positive");
  Impl& m = *impl_;
  m.omega = omega;
  m.grid = Grid2D::covering(omega.lo(), omega.hi(), h, 2);
  const Grid2D& g = m.grid;
  m.symmetric = a.symmetric;

  // node classes: interior unknowns, puncture nodes (boundary), exterior
  m.unknown.assign(g.size(), -1);
  std::vector<int> puncture_b(g.size(), -1);
  std::vector<std::uint8_t> inside(g.size(), 0);
  // a node on the boundary to rounding is data, not an unknown: its links
  // would be cut at theta = 0 and break the symmetry of M_II
  for (std::size_t k = 0; k < g.size(); ++k)
    inside[k] = omega.contains(g.node(k)) && omega.distance(g.node(k)) > 1e-9 * h;
  for (std::size_t c = 0; c < omega.punctures().size(); ++c) {
    const Point p = omega.punctures()[c];
    const int i = static_cast<int>(std::lround(g.fx(p))), j = static_cast<int>(std::lround(g.fy(p)));
    if (!g.in_range(i, j)) continue;
    const std::size_t k = g.index(i, j);
    if (!inside[k]) continue;
    inside[k] = 0;
    BoundaryLocation loc;
    loc.point = p;
    loc.loop = -1 - static_cast<int>(c);
    puncture_b[k] = static_cast<int>(m.boundary.size());
    m.boundary.push_back(loc);
  }
  for (std::size_t k = 0; k < g.size(); ++k)
    if (inside[k]) {
      m.unknown[k] = static_cast<int>(m.nodes.size());
      m.nodes.push_back(k);
    }
  if (m.nodes.empty()) throw Error(ErrorCode::DisconnectedInterior, "no grid node inside the domain at h = " + std::to_string(h));

  std::vector<Mat2> coef(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) coef[k] = a.eval(g.node(k));

  using T = Eigen::Triplet<double>;
  std::vector<T> tii, tib;
  tii.reserve(m.nodes.size() * 5);
  std::vector<std::uint8_t> touches_boundary(m.nodes.size(), 0);
  std::vector<int> projected(g.size(), -1);
  auto projected_node = [&](std::size_t k) {
    if (puncture_b[k] >= 0) return puncture_b[k];
    if (projected[k] < 0) {
      projected[k] = static_cast<int>(m.boundary.size());
      m.boundary.push_back(omega.closest_point(g.node(k)));
    }
    return projected[k];
  };

  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (std::size_t u = 0; u < m.nodes.size(); ++u) {
    const std::size_t k = m.nodes[u];
    const int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
    const Point p = g.node(k);
    const bool near = omega.safe_distance(p) <= 1.01 * h;
    double diag = 0.0;
    for (int d = 0; d < 4; ++d) {
      const std::size_t q = g.index(i + di[d], j + dj[d]);
      const bool xlink = d < 2;
      const double ap = xlink ? coef[k](0, 0) : coef[k](1, 1);
      const double aq = xlink ? coef[q](0, 0) : coef[q](1, 1);
      double t = 2.0;
      BoundaryLocation loc;
      const bool cut = near && omega.first_crossing(p, g.node(q), t, loc);
      if (cut) {
        const double c = ap / std::max(t, kThetaMin);
        diag += c;
        tib.emplace_back(static_cast<int>(u), static_cast<int>(m.boundary.size()), -c);
        m.boundary.push_back(loc);
        touches_boundary[u] = 1;
      } else if (puncture_b[q] >= 0) {
        const double c = harmonic(ap, aq);
        diag += c;
        tib.emplace_back(static_cast<int>(u), puncture_b[q], -c);
        touches_boundary[u] = 1;
      } else if (m.unknown[q] >= 0) {
        const double c = harmonic(ap, aq);
        diag += c;
        tii.emplace_back(static_cast<int>(u), m.unknown[q], -c);
      } else {
        // outside but no crossing found (node on the boundary to rounding)
        diag += ap;
        tib.emplace_back(static_cast<int>(u), projected_node(q), -ap);
        touches_boundary[u] = 1;
      }
    }
    tii.emplace_back(static_cast<int>(u), static_cast<int>(u), diag);
  }

  if (has_mixed(a)) {
    for (int j = 0; j + 1 < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i) {
        const std::size_t c[4] = {g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)};
        if (m.unknown[c[0]] < 0 && m.unknown[c[1]] < 0 && m.unknown[c[2]] < 0 && m.unknown[c[3]] < 0) continue;
        const Mat2 ac = a.eval(g.node(i, j) + Point(0.5 * h, 0.5 * h));
        const double a12 = ac(0, 1), a21 = ac(1, 0);
        if (a12 == 0.0 && a21 == 0.0) continue;
        for (int r = 0; r < 4; ++r) {
          const int row = m.unknown[c[r]];
          if (row < 0) continue;
          for (int s = 0; s < 4; ++s) {
            const double v = 0.25 * (a12 * kSx[r] * kSy[s] + a21 * kSy[r] * kSx[s]);
            if (v == 0.0) continue;
            if (m.unknown[c[s]] >= 0) {
              tii.emplace_back(row, m.unknown[c[s]], v);
            } else {
              tib.emplace_back(row, projected_node(c[s]), v);
              touches_boundary[row] = 1;
            }
          }
        }
      }
  }

  const int ni = static_cast<int>(m.nodes.size()), nb = static_cast<int>(m.boundary.size());
  m.m_ii.resize(ni, ni);
  m.m_ii.setFromTriplets(tii.begin(), tii.end());
  m.m_ib.resize(ni, nb);
  m.m_ib.setFromTriplets(tib.begin(), tib.end());
  // a cut on one side of a link between two unknowns (boundary passing
  // between them) leaves M_II unsymmetric even for symmetric A
  if (m.symmetric) {
    const SparseMatrix skew = m.m_ii - SparseMatrix(m.m_ii.transpose());
    m.symmetric = skew.norm() <= 1e-12 * m.m_ii.norm();
  }

  // every interior component must reach the boundary, or M_II is singular
  std::vector<std::uint8_t> seen(ni, 0);
  std::deque<int> queue;
  for (int u = 0; u < ni; ++u)
    if (touches_boundary[u]) {
      seen[u] = 1;
      queue.push_back(u);
    }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    const std::size_t k = m.nodes[u];
    const int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
    for (int d = 0; d < 4; ++d) {
      const int v = m.unknown[g.index(i + di[d], j + dj[d])];
      if (v >= 0 && !seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
    }
  }
  const auto lost = std::count(seen.begin(), seen.end(), 0);
  if (lost > 0)
    throw Error(ErrorCode::DisconnectedInterior, std::to_string(lost) + " interior nodes have no path to the boundary");
}

const Grid2D& EllipticProblem::grid() const { return impl_->grid; }
const DomainSpec& EllipticProblem::domain() const { return impl_->omega; }
bool EllipticProblem::symmetric() const { return impl_->symmetric; }
std::size_t EllipticProblem::interior_count() const { return impl_->nodes.size(); }
std::size_t EllipticProblem::boundary_count() const { return impl_->boundary.size(); }
int EllipticProblem::unknown(std::size_t node) const { return impl_->unknown[node]; }
std::size_t EllipticProblem::node_of(std::size_t u) const { return impl_->nodes[u]; }
const std::vector<BoundaryLocation>& EllipticProblem::boundary() const { return impl_->boundary; }
const SparseMatrix& EllipticProblem::m_ii() const { return impl_->m_ii; }
const SparseMatrix& EllipticProblem::m_ib() const { return impl_->m_ib; }
const LinearSolveStats& EllipticProblem::last_stats() const { return impl_->stats; }

Eigen::VectorXd EllipticProblem::solve(const Eigen::VectorXd& rhs) const { return impl_->run(rhs, false); }
Eigen::VectorXd EllipticProblem::solve_adjoint(const Eigen::VectorXd& rhs) const { return impl_->run(rhs, true); }

Eigen::VectorXd EllipticProblem::boundary_values(const std::function<double(const BoundaryLocation&)>& f) const {
  Eigen::VectorXd ub(impl_->boundary.size());
  for (std::size_t b = 0; b < impl_->boundary.size(); ++b) ub[b] = f(impl_->boundary[b]);
  return ub;
}

RealField EllipticProblem::to_field(const Eigen::VectorXd& interior, double exterior) const {
  const Impl& m = *impl_;
  RealField out(m.grid, exterior);
  for (std::size_t u = 0; u < m.nodes.size(); ++u) out.values[m.nodes[u]] = interior[u];
  return out;
}

RealField EllipticProblem::dirichlet(const std::function<double(const BoundaryLocation&)>& f) const {
  const Impl& m = *impl_;
  const Eigen::VectorXd ub = boundary_values(f);
  const Eigen::VectorXd rhs = -(m.m_ib * ub);
  const Eigen::VectorXd ui = solve(rhs);
  RealField out(m.grid, 0.0);
  for (std::size_t u = 0; u < m.nodes.size(); ++u) out.values[m.nodes[u]] = ui[u];
  for (std::size_t k = 0; k < m.grid.size(); ++k)
    if (m.unknown[k] < 0) out.values[k] = f(m.omega.closest_point(m.grid.node(k)));
  return out;
}

std::vector<std::pair<int, double>> EllipticProblem::pole_weights(Point p) const {
  const Impl& m = *impl_;
  const double fx = m.grid.fx(p), fy = m.grid.fy(p);
  const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
  const double tx = fx - i, ty = fy - j;
  std::vector<std::pair<int, double>> w;
  const double wt[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  const int ci[4] = {i, i + 1, i, i + 1}, cj[4] = {j, j, j + 1, j + 1};
  for (int c = 0; c < 4; ++c) {
    if (wt[c] == 0.0) continue;
    const int u = m.grid.in_range(ci[c], cj[c]) ? m.unknown[m.grid.index(ci[c], cj[c])] : -1;
    if (u < 0) throw Error(ErrorCode::DomainError, "pole too close to the boundary for the grid");
    w.emplace_back(u, wt[c]);
  }
  return w;
}

RealField apply_operator(const MatrixField& a, const RealField& u) {
  const Grid2D& g = u.grid;
  const double h = g.h;
  RealField out(g, 0.0);
  std::vector<Mat2> coef(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) coef[k] = a.eval(g.node(k));
  const bool mixed = has_mixed(a);
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      double acc = 0.0;
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        const std::size_t q = g.index(i + di[d], j + dj[d]);
        const double c = d < 2 ? harmonic(coef[k](0, 0), coef[q](0, 0)) : harmonic(coef[k](1, 1), coef[q](1, 1));
        acc += c * (u.values[k] - u.values[q]);
      }
      if (mixed) {
        // the four plaquettes around node k; r is k's corner slot in each
        const int pi[4] = {i, i - 1, i, i - 1}, pj[4] = {j, j, j - 1, j - 1};
        const int slot[4] = {0, 1, 2, 3};
        for (int pq = 0; pq < 4; ++pq) {
          const int i0 = pi[pq], j0 = pj[pq];
          const Mat2 ac = a.eval(g.node(i0, j0) + Point(0.5 * h, 0.5 * h));
          const std::size_t c[4] = {g.index(i0, j0), g.index(i0 + 1, j0), g.index(i0, j0 + 1), g.index(i0 + 1, j0 + 1)};
          const int r = slot[pq];
          for (int s = 0; s < 4; ++s)
            acc += 0.25 * (ac(0, 1) * kSx[r] * kSy[s] + ac(1, 0) * kSy[r] * kSx[s]) * u.values[c[s]];
        }
      }
      out.values[k] = acc / (h * h);
    }
  return out;
}

}  // namespace qclab
