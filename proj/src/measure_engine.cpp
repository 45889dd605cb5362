#include "qclab/measure_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qclab/capacity.hpp"
#include "qclab/qc_map.hpp"

namespace qclab {

double BoundaryMeasure::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void write_measure_csv(const BoundaryMeasure& m, std::ostream& os) {
  os << "arc_index,s_start,s_end,weight,stderr,method,pole_x,pole_y,loop,source\n";
  char buf[512];
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    const Arc& a = m.partition.arcs[j];
    const double se = j < m.std_error.size() ? m.std_error[j] : 0.0;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%d,%d\n", j, a.s0, a.s1, m.weights[j], se,
                  m.method.c_str(), m.pole.real(), m.pole.imag(), a.loop, a.source);
    os << buf;
  }
}

BoundaryMeasure read_measure_csv(std::istream& is) {
  BoundaryMeasure m;
  std::string line;
  // leading '#' lines carry provenance (config hash, seed)
  while (std::getline(is, line) && line.rfind('#', 0) == 0) {
  }
  if (line.rfind("arc_index,", 0) != 0) throw Error(ErrorCode::IOError, "measure csv: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 8) throw Error(ErrorCode::IOError, "measure csv: short row");
    try {
      Arc a;
      a.s0 = std::stod(f[1]);
      a.s1 = std::stod(f[2]);
      if (f.size() >= 10) {
        a.loop = std::stoi(f[8]);
        a.source = std::stoi(f[9]);
      }
      m.partition.arcs.push_back(a);
      m.weights.push_back(std::stod(f[3]));
      m.std_error.push_back(std::stod(f[4]));
      m.method = f[5];
      m.pole = Point(std::stod(f[6]), std::stod(f[7]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::IOError, "measure csv: unparsable row: " + line);
    }
  }
  return m;
}

namespace {

Eigen::VectorXd interior_solution(const EllipticProblem& problem, const Eigen::VectorXd& ub) {
  return problem.solve(-(problem.m_ib() * ub));
}

std::vector<std::uint8_t> inside_mask(const EllipticProblem& problem) {
  std::vector<std::uint8_t> in(problem.grid().size(), 0);
  for (std::size_t k = 0; k < in.size(); ++k) in[k] = problem.unknown(k) >= 0;
  return in;
}

}  // namespace

DirichletSolution solve_dirichlet(const EllipticProblem& problem, const std::function<double(const BoundaryLocation&)>& f) {
  DirichletSolution out;
  const Eigen::VectorXd ub = problem.boundary_values(f);
  out.u = problem.dirichlet(f);
  out.stats = problem.last_stats();
  out.inside = inside_mask(problem);
  if (ub.size() > 0) {
    out.data_min = ub.minCoeff();
    out.data_max = ub.maxCoeff();
  }
  return out;
}

DirichletSolution solve_dirichlet(const MatrixField& a, const DomainSpec& omega,
                                  const std::function<double(const BoundaryLocation&)>& f, double h) {
  return solve_dirichlet(EllipticProblem(a, omega, h), f);
}

std::vector<std::pair<int, double>> arc_ramps(const BoundaryPartition& partition, const DomainSpec& omega,
                                              const BoundaryLocation& where, double width) {
  std::vector<std::pair<int, double>> out;
  if (where.loop < 0) return out;
  const int a = partition.arc_of(where.loop, where.s);
  if (a < 0) return out;
  int first = a, last = a;
  while (first > 0 && partition.arcs[first - 1].loop == where.loop) --first;
  while (last + 1 < static_cast<int>(partition.arcs.size()) && partition.arcs[last + 1].loop == where.loop) ++last;
  if (first == last) return {{a, 1.0}};
  const double len = omega.loop_length(where.loop);
  const double half = 0.5 * width;
  double s = where.s;
  const Arc& arc = partition.arcs[a];
  if (s < arc.s0) s += len;  // wrapped into the last arc
  const double d0 = s - arc.s0, d1 = arc.s1 - s;
  double w_prev = d0 < half ? (half - d0) / width : 0.0;
  double w_next = d1 < half ? (half - d1) / width : 0.0;
  double w_this = 1.0 - w_prev - w_next;
  if (w_this < 0) {
    const double t = w_prev + w_next;
    w_prev /= t;
    w_next /= t;
    w_this = 0.0;
  }
  const int prev = a == first ? last : a - 1;
  const int next = a == last ? first : a + 1;
  out.emplace_back(a, w_this);
  if (w_prev > 0) out.emplace_back(prev, w_prev);
  if (w_next > 0) out.emplace_back(next, w_next);
  return out;
}

Eigen::VectorXd pole_boundary_weights(const EllipticProblem& problem, Point pole) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(problem.interior_count());
  for (const auto& [u, w] : problem.pole_weights(pole)) beta[u] += w;
  const Eigen::VectorXd w = problem.solve_adjoint(beta);
  return -(problem.m_ib().transpose() * w);
}

BoundaryMeasure elliptic_measure(const EllipticProblem& problem, Point pole, const BoundaryPartition& partition) {
  const DomainSpec& omega = problem.domain();
  if (!omega.contains(pole) || omega.distance(pole) < 4 * problem.h())
    throw Error(ErrorCode::DomainError, "pole must be interior with distance >= 4h from the boundary");
  const Eigen::VectorXd c = pole_boundary_weights(problem, pole);
  BoundaryMeasure m;
  m.partition = partition;
  m.pole = pole;
  m.method = "pde";
  m.weights.assign(partition.size(), 0.0);
  m.std_error.assign(partition.size(), 0.0);
  const double width = 2.0 * problem.h();
  for (std::size_t b = 0; b < problem.boundary_count(); ++b) {
    const BoundaryLocation& loc = problem.boundary()[b];
    if (loc.loop < 0) {
      m.leakage += c[b];
      continue;
    }
    for (const auto& [arc, w] : arc_ramps(partition, omega, loc, width)) m.weights[arc] += c[b] * w;
  }
  m.raw_sum = m.total();
  if (m.raw_sum > 0)
    for (double& w : m.weights) w /= m.raw_sum;
  return m;
}

BoundaryMeasure elliptic_measure(const MatrixField& a, const DomainSpec& omega, Point pole,
                                 const BoundaryPartition& partition, double h) {
  return elliptic_measure(EllipticProblem(a, omega, h), pole, partition);
}

double GreenField::value(Point z) const { return bilinear(g, z); }

GreenField green_function(const EllipticProblem& problem, Point pole, const std::string& matrix_id) {
  const Grid2D& grid = problem.grid();
  const double h = grid.h;
  const int ic = static_cast<int>(std::lround(grid.fx(pole))), jc = static_cast<int>(std::lround(grid.fy(pole)));
  Eigen::VectorXd src = Eigen::VectorXd::Zero(problem.interior_count());
  double mass = 0.0;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int i = ic + di, j = jc + dj;
      const double w = grid.in_range(i, j) ? std::max(0.0, 1.0 - std::abs(grid.node(i, j) - pole) / (1.5 * h)) : 0.0;
      if (w == 0.0) continue;
      const int u = problem.unknown(grid.index(i, j));
      if (u < 0) throw Error(ErrorCode::DomainError, "Green source reaches outside the domain");
      src[u] += w;
      mass += w;
    }
  src /= mass;
  GreenField out;
  out.g = problem.to_field(problem.solve(src), 0.0);
  out.pole = pole;
  out.mollifier_radius = 1.5 * h;
  out.matrix_id = matrix_id;
  return out;
}

GreenField green_function(const MatrixField& a, const DomainSpec& omega, Point pole, double h) {
  return green_function(EllipticProblem(a, omega, h), pole);
}

PushforwardReport pushforward_compare(const BoundaryMeasure& omega_a, const QCMap& phi, const BoundaryMeasure& omega_harm,
                                      double tolerance) {
  const std::size_t m = omega_a.weights.size();
  if (omega_harm.weights.size() != m) throw Error(ErrorCode::PartitionMismatch, "arc counts differ");
  for (std::size_t j = 0; j < m; ++j)
    if (omega_harm.partition.arcs[j].source != static_cast<int>(j))
      throw Error(ErrorCode::PartitionMismatch, "image arc " + std::to_string(j) + " does not come from source arc " + std::to_string(j));
  const Point fp = phi(omega_a.pole);
  if (std::abs(fp - omega_harm.pole) > 1e-6 * (1.0 + std::abs(fp)))
    throw Error(ErrorCode::PartitionMismatch, "poles do not correspond under phi");
  PushforwardReport r;
  r.tolerance = tolerance;
  r.difference.resize(m);
  r.ratio.resize(m);
  double sum = 0.0, noise = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = omega_a.weights[j] - omega_harm.weights[j];
    r.difference[j] = d;
    r.ratio[j] = omega_harm.weights[j] > 0 ? omega_a.weights[j] / omega_harm.weights[j] : std::numeric_limits<double>::infinity();
    r.linf = std::max(r.linf, std::abs(d));
    sum += std::abs(d);
    const double se = j < omega_harm.std_error.size() ? omega_harm.std_error[j] : 0.0;
    noise += std::sqrt(2.0 / kPi) * se;
  }
  r.tv = 0.5 * sum;
  r.mc_floor = 0.5 * noise;
  r.pass = r.tv <= tolerance;
  return r;
}

BourgainRow bourgain_audit(const EllipticProblem& problem, Point x0, double r) {
  const Grid2D& g = problem.grid();
  std::vector<int> poles;
  for (std::size_t u = 0; u < problem.interior_count(); ++u)
    if (std::abs(g.node(problem.node_of(u)) - x0) < r) poles.push_back(static_cast<int>(u));
  if (poles.empty()) throw Error(ErrorCode::NoInteriorPole, "no interior grid node within r of x0");
  auto near = [&](const BoundaryLocation& b) { return std::abs(b.point - x0) < 2.0 * r ? 1.0 : 0.0; };
  const Eigen::VectorXd in = interior_solution(problem, problem.boundary_values(near));
  const Eigen::VectorXd out =
      interior_solution(problem, problem.boundary_values([&](const BoundaryLocation& b) { return 1.0 - near(b); }));
  BourgainRow row;
  row.r = r;
  row.poles = poles.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int u : poles) {
    lo = std::min(lo, in[u]);
    hi = std::max(hi, out[u]);
  }
  row.tau = lo;
  row.tau_disjoint = 1.0 - hi;
  return row;
}

BourgainReport bourgain_sweep(const EllipticProblem& problem, Point x0, const std::vector<double>& radii, double floor) {
  BourgainReport rep;
  rep.x0 = x0;
  rep.floor = floor;
  rep.tau_min = 1.0;
  bool ok = !radii.empty();
  for (double r : radii) {
    const BourgainRow row = bourgain_audit(problem, x0, r);
    rep.rows.push_back(row);
    rep.tau_min = std::min({rep.tau_min, row.tau, row.tau_disjoint});
    ok = ok && row.tau >= floor && row.tau_disjoint >= floor;
  }
  rep.pass = ok;
  return rep;
}

ComparabilityReport green_measure_comparability(const MatrixField& a, const DomainSpec& omega, Point x0,
                                                const std::vector<double>& radii, Point pole, double h,
                                                double spread_limit) {
  const EllipticProblem problem(a, omega, h);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(problem.interior_count());
  for (const auto& [u, w] : problem.pole_weights(pole)) beta[u] += w;
  // adjoint state: discrete Green function of A^T with pole p
  const Eigen::VectorXd g = problem.solve_adjoint(beta);
  const Eigen::VectorXd c = -(problem.m_ib().transpose() * g);
  const Grid2D& grid = problem.grid();
  auto omega_ball = [&](double r) {
    double s = 0.0;
    for (std::size_t b = 0; b < problem.boundary_count(); ++b)
      if (std::abs(problem.boundary()[b].point - x0) < r) s += c[b];
    return s;
  };
  auto max_g = [&](double r) {
    double m = 0.0;
    for (std::size_t u = 0; u < problem.interior_count(); ++u)
      if (std::abs(grid.node(problem.node_of(u)) - x0) < r) m = std::max(m, g[u]);
    return m;
  };
  ComparabilityReport rep;
  rep.spread_limit = spread_limit;
  rep.upper_lo = rep.lower_lo = std::numeric_limits<double>::infinity();
  bool finite = !radii.empty();
  for (double r : radii) {
    if (std::abs(pole - x0) < 4 * r) throw Error(ErrorCode::DomainError, "pole must lie outside 4B");
    ComparabilityRow row;
    row.r = r;
    row.omega_b = omega_ball(r);
    row.max_g_2b = max_g(2 * r);
    row.ratio_upper = row.max_g_2b > 0 ? row.omega_b / row.max_g_2b : std::numeric_limits<double>::infinity();
    row.max_g_b = max_g(r);
    row.omega_4b = omega_ball(4 * r);
    row.ratio_lower = row.omega_4b > 0 ? row.max_g_b / row.omega_4b : std::numeric_limits<double>::infinity();
    finite = finite && std::isfinite(row.ratio_upper) && std::isfinite(row.ratio_lower) && row.ratio_upper > 0 &&
             row.ratio_lower > 0;
    rep.upper_lo = std::min(rep.upper_lo, row.ratio_upper);
    rep.upper_hi = std::max(rep.upper_hi, row.ratio_upper);
    rep.lower_lo = std::min(rep.lower_lo, row.ratio_lower);
    rep.lower_hi = std::max(rep.lower_hi, row.ratio_lower);
    rep.rows.push_back(row);
  }
  rep.pass = finite && rep.upper_hi <= spread_limit * rep.upper_lo && rep.lower_hi <= spread_limit * rep.lower_lo;
  return rep;
}

std::vector<double> ring_values(const EllipticProblem& problem, Point y, int samples) {
  const double d = problem.domain().distance(y);
  const GreenField g = green_function(problem, y);
  std::vector<double> out;
  for (int k = 0; k < samples; ++k) out.push_back(g.value(y + std::polar(0.5 * d, 2.0 * kPi * k / samples)));
  return out;
}

double cdc_ratio(const DomainSpec& omega, Point x0, double r, int cells_per_radius) {
  const int c = std::max(4, cells_per_radius);
  const double h = r / c;
  Grid2D g;
  g.h = h;
  g.nx = g.ny = 4 * c + 3;
  g.origin = x0 - Point((2 * c + 1) * h, (2 * c + 1) * h);
  std::vector<std::uint8_t> kmask(g.size(), 0), omask(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = std::abs(g.node(k) - x0);
    omask[k] = d < 2 * r;
    if (d <= r * (1 + 1e-12) && !omega.contains(g.node(k))) kmask[k] = 1;
  }
  for (const Point& p : omega.punctures()) {
    if (std::abs(p - x0) > r) continue;
    const int i = static_cast<int>(std::lround(g.fx(p))), j = static_cast<int>(std::lround(g.fy(p)));
    if (g.in_range(i, j)) kmask[g.index(i, j)] = 1;
  }
  try {
    return capacity(kmask, omask, g).value;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyK) return 0.0;
    throw;
  }
}

CDCReport cdc_audit(const DomainSpec& omega, double c0, double r0, int n_centers, int n_radii, int cells_per_radius) {
  if (!(c0 > 0) || !(r0 > 0)) throw Error(ErrorCode::DomainError, "CDC parameters must be positive");
  std::vector<std::pair<Point, bool>> centers;
  const double per = omega.perimeter();
  for (int k = 0; k < n_centers; ++k) {
    double s = (k + 0.5) * per / n_centers;
    int loop = 0;
    while (loop + 1 < static_cast<int>(omega.loops().size()) && s >= omega.loop_length(loop)) s -= omega.loop_length(loop++);
    centers.emplace_back(omega.point_at(loop, s), false);
  }
  for (const Point& p : omega.punctures()) centers.emplace_back(p, true);
  CDCReport rep;
  rep.c0 = c0;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& [x0, punct] : centers)
    for (int k = 0; k < n_radii; ++k) {
      CDCEntry e;
      e.x0 = x0;
      e.r = r0 * std::ldexp(1.0, -k);
      e.puncture = punct;
      e.ratio = cdc_ratio(omega, x0, e.r, cells_per_radius);
      rep.min_ratio = std::min(rep.min_ratio, e.ratio);
      rep.entries.push_back(e);
    }
  rep.pass = !rep.entries.empty() && rep.min_ratio >= c0;
  return rep;
}

CDCRefinement cdc_refinement(const DomainSpec& omega, Point x0, double r, const std::vector<int>& cells) {
  if (cells.size() < 2) throw Error(ErrorCode::InsufficientScales, "need at least two resolutions");
  CDCRefinement ref;
  ref.x0 = x0;
  ref.r = r;
  ref.cells = cells;
  std::vector<double> lx, ly;
  for (int c : cells) {
    ref.ratios.push_back(cdc_ratio(omega, x0, r, c));
    lx.push_back(std::log(static_cast<double>(c)));
    ly.push_back(ref.ratios.back() > 0 ? 1.0 / ref.ratios.back() : std::numeric_limits<double>::infinity());
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k] / lx.size();
    my += ly[k] / ly.size();
  }
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  ref.inverse_slope = sxy / sxx;
  bool decreasing = true;
  for (std::size_t k = 1; k < ref.ratios.size(); ++k) decreasing = decreasing && ref.ratios[k] < ref.ratios[k - 1];
  ref.vanishing = decreasing && ref.inverse_slope >= 1.0 / (4.0 * kPi);
  return ref;
}

}  // namespace qclab
