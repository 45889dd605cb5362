#include "qclab/qc_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "qclab/elliptic_operator.hpp"

namespace qclab {

namespace {

Point random_in_disk(std::mt19937_64& rng, Point c, double r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return c + std::polar(r * std::sqrt(u(rng)), 2.0 * kPi * u(rng));
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

HolderReport holder_diagnostic(const QCMap& phi, double K, Point center, double r, int n_points, std::uint64_t seed) {
  HolderReport rep;
  rep.bound = 1.0 / K - 0.05;
  for (double t = 0.5 * r; t >= 4.0 * phi.grid.h; t *= 0.5) rep.scales.push_back(t);
  if (rep.scales.size() < 2) throw Error(ErrorCode::InsufficientScales, "ball too small for the grid");
  std::mt19937_64 rng(seed);
  std::vector<Point> bases{center};
  for (int k = 0; k < n_points; ++k) bases.push_back(random_in_disk(rng, center, 0.5 * r));
  std::vector<double> lx;
  for (double t : rep.scales) lx.push_back(std::log(t));
  rep.alpha_hat = std::numeric_limits<double>::infinity();
  for (const Point& z0 : bases) {
    const Point f0 = phi(z0);
    std::vector<double> ly;
    for (double t : rep.scales) {
      double osc = 0.0;
      for (int d = 0; d < 16; ++d) osc = std::max(osc, std::abs(phi(z0 + std::polar(t, 2.0 * kPi * d / 16)) - f0));
      ly.push_back(std::log(osc));
    }
    const double a = slope(lx, ly);
    if (a < rep.alpha_hat) {
      rep.alpha_hat = a;
      rep.worst = z0;
    }
  }
  rep.pass = rep.alpha_hat >= rep.bound;
  return rep;
}

QuasisymmetryReport quasisymmetry_diagnostic(const QCMap& phi, int n_triples, std::uint64_t seed, Point center, double r) {
  QuasisymmetryReport rep;
  for (int k = -4; k < 4; ++k) {
    QuasisymmetryBin b;
    b.t_lo = std::ldexp(1.0, k);
    b.t_hi = std::ldexp(1.0, k + 1);
    rep.bins.push_back(b);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = std::log(4.0 * phi.grid.h), hi = std::log(0.5 * r);
  for (int n = 0; n < n_triples; ++n) {
    const Point z0 = random_in_disk(rng, center, 0.5 * r);
    const double a = std::exp(lo + (hi - lo) * u(rng)), b = std::exp(lo + (hi - lo) * u(rng));
    const Point z1 = z0 + std::polar(a, 2.0 * kPi * u(rng));
    const Point z2 = z0 + std::polar(b, 2.0 * kPi * u(rng));
    const double t = a / b;
    const int bin = static_cast<int>(std::floor(std::log2(t))) + 4;
    if (bin < 0 || bin >= static_cast<int>(rep.bins.size())) continue;
    const Point f0 = phi(z0);
    const double den = std::abs(phi(z2) - f0);
    const double ratio = den > 0 ? std::abs(phi(z1) - f0) / den : std::numeric_limits<double>::infinity();
    auto& bn = rep.bins[bin];
    bn.eta = std::max(bn.eta, ratio);
    ++bn.count;
  }
  rep.finite = true;
  rep.monotone = true;
  double prev = 0.0;
  for (const auto& b : rep.bins) {
    if (b.count == 0) continue;
    rep.finite = rep.finite && std::isfinite(b.eta);
    if (b.eta < 0.9 * prev) rep.monotone = false;
    prev = std::max(prev, b.eta);
  }
  rep.pass = rep.finite && rep.monotone;
  return rep;
}

ConjugateResult harmonic_conjugate(const RealField& u, const MatrixField& a, const std::vector<std::uint8_t>& mask,
                                   double curl_tol) {
  const Grid2D& g = u.grid;
  if (mask.size() != g.size()) throw Error(ErrorCode::DomainError, "mask size must match the grid");
  const int di4[4] = {1, -1, 0, 0}, dj4[4] = {0, 0, 1, -1};

  // connectivity of the mask and of its complement (8-connected, through the frame)
  std::size_t start = g.size();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (mask[k]) {
      start = k;
      break;
    }
  if (start == g.size()) throw Error(ErrorCode::NotSimplyConnected, "empty mask");
  {
    const int px = g.nx + 2, py = g.ny + 2;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(px) * py, 0);
    auto blocked = [&](int i, int j) { return g.in_range(i - 1, j - 1) && mask[g.index(i - 1, j - 1)]; };
    std::deque<std::pair<int, int>> q{{0, 0}};
    seen[0] = 1;
    while (!q.empty()) {
      const auto [i, j] = q.front();
      q.pop_front();
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= px || jj >= py) continue;
          const std::size_t k = static_cast<std::size_t>(jj) * px + ii;
          if (seen[k] || blocked(ii, jj)) continue;
          seen[k] = 1;
          q.emplace_back(ii, jj);
        }
    }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (!mask[g.index(i, j)] && !seen[static_cast<std::size_t>(j + 1) * px + i + 1])
          throw Error(ErrorCode::NotSimplyConnected, "mask has a hole");
  }

  const ComplexField grad = gradient(u);
  std::vector<Point> F(g.size());
  double fmax = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Mat2 m = a.eval(g.node(k));
    const double ux = grad.values[k].real(), uy = grad.values[k].imag();
    const double px = m(0, 0) * ux + m(0, 1) * uy, py = m(1, 0) * ux + m(1, 1) * uy;
    F[k] = Point(-py, px);
    if (mask[k]) fmax = std::max(fmax, std::abs(F[k]));
  }

  ConjugateResult res;
  res.mask = mask;
  res.v = RealField(g, 0.0);
  std::vector<std::uint8_t> done(g.size(), 0);
  std::deque<std::size_t> q{start};
  done[start] = 1;
  while (!q.empty()) {
    const std::size_t k = q.front();
    q.pop_front();
    const int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
    for (int d = 0; d < 4; ++d) {
      const int ii = i + di4[d], jj = j + dj4[d];
      if (!g.in_range(ii, jj)) continue;
      const std::size_t n = g.index(ii, jj);
      if (!mask[n] || done[n]) continue;
      const Point step = g.node(n) - g.node(k);
      const Point fm = 0.5 * (F[k] + F[n]);
      res.v.values[n] = res.v.values[k] + fm.real() * step.real() + fm.imag() * step.imag();
      done[n] = 1;
      q.push_back(n);
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k)
    if (mask[k] && !done[k]) throw Error(ErrorCode::NotSimplyConnected, "mask is not connected");

  const double h = g.h;
  int ilo = g.nx, ihi = -1, jlo = g.ny, jhi = -1;
  for (int j = 1; j + 2 < g.ny; ++j)
    for (int i = 1; i + 2 < g.nx; ++i) {
      const std::size_t c00 = g.index(i, j), c10 = g.index(i + 1, j), c01 = g.index(i, j + 1), c11 = g.index(i + 1, j + 1);
      if (!(mask[c00] && mask[c10] && mask[c01] && mask[c11])) continue;
      ilo = std::min(ilo, i);
      ihi = std::max(ihi, i + 1);
      jlo = std::min(jlo, j);
      jhi = std::max(jhi, j + 1);
      const double circ = 0.5 * h * ((F[c00].real() + F[c10].real()) + (F[c10].imag() + F[c11].imag()) -
                                     (F[c11].real() + F[c01].real()) - (F[c01].imag() + F[c00].imag()));
      res.max_curl = std::max(res.max_curl, std::abs(circ) / (h * h));
    }
  const double extent = ihi >= 0 ? std::max(ihi - ilo, jhi - jlo) * h : h;
  res.relative_curl = fmax > 0 ? res.max_curl * extent / fmax : 0.0;
  const ComplexField gv = gradient(res.v);
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!(mask[k] && mask[g.index(i + 1, j)] && mask[g.index(i - 1, j)] && mask[g.index(i, j + 1)] && mask[g.index(i, j - 1)]))
        continue;
      res.grad_error = std::max(res.grad_error, std::abs(gv.values[k] - F[k]));
    }
  if (res.relative_curl > curl_tol)
    throw Error(ErrorCode::CurlTooLarge, "relative curl " + std::to_string(res.relative_curl) + " exceeds " +
                                             std::to_string(curl_tol));
  return res;
}

FactorizationReport factorization_check(const RealField& u, const MatrixField& a, const QCMap& phi,
                                        const Grid2D& image_grid, double C) {
  FactorizationReport rep;
  rep.h = image_grid.h;
  rep.C = C;
  const InverseSampler& inv = phi.inverse();
  const Grid2D& ug = u.grid;
  rep.composed = RealField(image_grid, 0.0);
  std::vector<std::uint8_t> valid(image_grid.size(), 0);
  for (std::size_t k = 0; k < image_grid.size(); ++k) {
    const Point w = image_grid.node(k);
    if (!inv.in_image(w)) continue;
    const Point z = inv(w);
    const double fx = ug.fx(z), fy = ug.fy(z);
    if (fx < 2 || fy < 2 || fx > ug.nx - 3 || fy > ug.ny - 3) continue;
    valid[k] = 1;
    rep.composed.values[k] = bicubic(u, z);
  }
  const double h2 = image_grid.h * image_grid.h;
  for (int j = 1; j + 1 < image_grid.ny; ++j)
    for (int i = 1; i + 1 < image_grid.nx; ++i) {
      const std::size_t k = image_grid.index(i, j);
      const std::size_t nb[4] = {image_grid.index(i + 1, j), image_grid.index(i - 1, j), image_grid.index(i, j + 1),
                                 image_grid.index(i, j - 1)};
      if (!valid[k] || !valid[nb[0]] || !valid[nb[1]] || !valid[nb[2]] || !valid[nb[3]]) continue;
      const auto& v = rep.composed.values;
      const double lap = (v[nb[0]] + v[nb[1]] + v[nb[2]] + v[nb[3]] - 4 * v[k]) / h2;
      rep.residual = std::max(rep.residual, std::abs(lap));
      ++rep.nodes;
    }
  const RealField lu = apply_operator(a, u);
  for (int j = 2; j + 2 < ug.ny; ++j)
    for (int i = 2; i + 2 < ug.nx; ++i) rep.operator_residual = std::max(rep.operator_residual, std::abs(lu(i, j)));
  rep.pass = rep.nodes > 0 && rep.residual <= C * rep.h;
  return rep;
}

}  // namespace qclab
