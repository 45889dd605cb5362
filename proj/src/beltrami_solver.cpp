#include "qclab/beltrami_solver.hpp"

#include <algorithm>
#include <cmath>

#include "qclab/fft.hpp"

namespace qclab {

namespace {

void require_box(const Grid2D& g) {
  if (g.nx != g.ny || g.nx < 8) throw Error(ErrorCode::SupportTooLarge, "box grid must be square with n >= 8");
}

Point box_center(const Grid2D& g) { return g.origin + Point(0.5 * g.nx * g.h, 0.5 * g.ny * g.h); }

void require_support(const Grid2D& g, const std::vector<Complex>& v) {
  const Point c = box_center(g);
  const double quarter = 0.25 * g.nx * g.h;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (v[k] == Complex(0.0, 0.0)) continue;
    const Point z = g.node(k) - c;
    if (std::max(std::abs(z.real()), std::abs(z.imag())) >= quarter)
      throw Error(ErrorCode::SupportTooLarge, "data reaches the outer quarter of the box");
  }
}

double l2(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

// (u e^-u - (1 - e^-u)) / u^2, finite at u = 0
double s_gauss_factor(double u) {
  if (u < 1e-3) return -0.5 + u / 3.0 - u * u / 8.0;
  return (u * std::exp(-u) + std::expm1(-u)) / (u * u);
}

}  // namespace

ComplexField beurling_transform(const ComplexField& g) {
  require_box(g.grid);
  require_support(g.grid, g.values);
  const int n = g.grid.nx;
  const double side = n * g.grid.h;
  std::vector<Complex> data = g.values;
  FFT2 fft(n);
  fft.forward(data);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Complex xi(wavenumber(i, n, side), wavenumber(j, n, side));
      auto& v = data[static_cast<std::size_t>(j) * n + i];
      v = std::abs(xi) > 0 ? v * std::conj(xi) / xi : Complex(0.0, 0.0);
    }
  fft.inverse(data);
  ComplexField out(g.grid);
  out.values = std::move(data);
  return out;
}

struct PlanarTransforms::Impl {
  explicit Impl(int n) : fft(n) {}
  FFT2 fft;
  double side = 0.0;
  std::vector<Complex> s_symbol, c_symbol;
  std::vector<double> psi;
  std::vector<Complex> s_psi, c_psi, zbar;
  std::vector<Complex> work;

  void split(const std::vector<Complex>& g, double h2, Complex& mass) {
    mass = 0.0;
    for (const auto& v : g) mass += v;
    mass *= h2;
    work.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) work[k] = g[k] - mass * psi[k];
  }
};

PlanarTransforms::PlanarTransforms(const Grid2D& box) : grid_(box) {
  require_box(box);
  const int n = box.nx;
  impl_ = std::make_unique<Impl>(n);
  Impl& m = *impl_;
  m.side = n * box.h;
  const std::size_t total = box.size();
  m.s_symbol.resize(total);
  m.c_symbol.resize(total);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Complex xi(wavenumber(i, n, m.side), wavenumber(j, n, m.side));
      const std::size_t k = static_cast<std::size_t>(j) * n + i;
      if (std::abs(xi) > 0) {
        m.s_symbol[k] = std::conj(xi) / xi;
        m.c_symbol[k] = Complex(0.0, -2.0) / xi;
      }
    }
  // mass carrier: Gaussian of width side/16 at the box centre
  const double sigma = m.side / 16.0;
  const double s2 = sigma * sigma;
  const Point c = box_center(box);
  m.psi.resize(total);
  m.s_psi.resize(total);
  m.c_psi.resize(total);
  m.zbar.resize(total);
  double mass = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const Point z = box.node(k) - c;
    const double u = std::norm(z) / s2;
    m.psi[k] = std::exp(-u) / (kPi * s2);
    mass += m.psi[k];
    m.zbar[k] = std::conj(z);
    m.s_psi[k] = std::conj(z) * std::conj(z) * s_gauss_factor(u) / (kPi * s2 * s2);
    m.c_psi[k] = u > 0 ? -std::expm1(-u) / (kPi * z) : Complex(0.0, 0.0);
  }
  mass *= box.h * box.h;
  for (auto& v : m.psi) v /= mass;
}

PlanarTransforms::~PlanarTransforms() = default;

void PlanarTransforms::beurling(const std::vector<Complex>& g, std::vector<Complex>& out) {
  Impl& m = *impl_;
  Complex mass;
  m.split(g, grid_.h * grid_.h, mass);
  m.fft.forward(m.work);
  for (std::size_t k = 0; k < m.work.size(); ++k) m.work[k] *= m.s_symbol[k];
  m.fft.inverse(m.work);
  out.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = m.work[k] + mass * m.s_psi[k];
}

void PlanarTransforms::cauchy(const std::vector<Complex>& g, std::vector<Complex>& out) {
  Impl& m = *impl_;
  Complex mass;
  m.split(g, grid_.h * grid_.h, mass);
  // the periodic kernel is 1/(pi z) - conj(z)/side^2 + O(|z|^3/side^4)
  Complex moment = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) moment += m.work[k] * m.zbar[k];
  moment *= grid_.h * grid_.h / (m.side * m.side);
  m.fft.forward(m.work);
  for (std::size_t k = 0; k < m.work.size(); ++k) m.work[k] *= m.c_symbol[k];
  m.fft.inverse(m.work);
  out.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = m.work[k] - moment + mass * m.c_psi[k];
}

BeltramiField sample_beltrami(const Grid2D& box, const std::function<Complex(Point)>& mu, int supersample,
                              Sampling mode) {
  const int s = std::max(1, supersample);
  auto cell_mean = [&](Point z, double h) {
    Complex acc = 0.0;
    for (int q = 0; q < s; ++q)
      for (int p = 0; p < s; ++p) acc += mu(z + h * Point((p + 0.5) / s - 0.5, (q + 0.5) / s - 0.5));
    return acc / static_cast<double>(s * s);
  };
  BeltramiField b(box);
  if (mode == Sampling::CellAverage) {
    for (std::size_t k = 0; k < box.size(); ++k) b.mu.values[k] = cell_mean(box.node(k), box.h);
  } else {
    require_box(box);
    const int n = box.nx, nf = 2 * n;
    Grid2D fine = box;
    fine.h = box.h / 2;
    fine.nx = fine.ny = nf;
    std::vector<Complex> data(fine.size());
    for (std::size_t k = 0; k < fine.size(); ++k) data[k] = cell_mean(fine.node(k), fine.h);
    {
      FFT2 fft(nf);
      fft.forward(data);
    }
    std::vector<Complex> coarse(box.size(), Complex(0.0, 0.0));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int mi = i < n / 2 ? i : i - n, mj = j < n / 2 ? j : j - n;
        if (mi == -n / 2 || mj == -n / 2) continue;  // drop the Nyquist line
        const int fi = mi >= 0 ? mi : mi + nf, fj = mj >= 0 ? mj : mj + nf;
        coarse[static_cast<std::size_t>(j) * n + i] = data[static_cast<std::size_t>(fj) * nf + fi] / 4.0;
      }
    data.clear();
    data.shrink_to_fit();
    FFT2 fft(n);
    fft.inverse(coarse);
    const Point c = box_center(box);
    const double quarter = 0.25 * n * box.h;
    for (std::size_t k = 0; k < box.size(); ++k) {
      const Point z = box.node(k) - c;
      const bool inside = std::max(std::abs(z.real()), std::abs(z.imag())) < quarter;
      b.mu.values[k] = inside ? coarse[k] : Complex(0.0, 0.0);
    }
  }
  b.update_support();
  b.bound = b.sup_mu();
  return b;
}

QCMap principal_solution(const BeltramiField& mu, double tol, int max_iter) {
  const Grid2D& g = mu.mu.grid;
  require_box(g);
  const double k = mu.sup_mu();
  if (!(k < 1.0)) throw Error(ErrorCode::NotContractive, "sup|mu| = " + std::to_string(k) + " >= 1");
  require_support(g, mu.mu.values);

  const std::vector<Complex>& m = mu.mu.values;
  const std::size_t total = g.size();
  const double norm_mu = l2(m);
  SolveReport report;
  std::vector<Complex> omega = m, s_omega(total), next(total);
  PlanarTransforms tr(g);
  if (norm_mu > 0) {
    bool done = false;
    for (int it = 1; it <= max_iter; ++it) {
      tr.beurling(omega, s_omega);
      double diff = 0.0;
      for (std::size_t q = 0; q < total; ++q) {
        next[q] = m[q] * (1.0 + s_omega[q]);
        diff += std::norm(next[q] - omega[q]);
      }
      omega.swap(next);
      const double r = std::sqrt(diff) / norm_mu;
      report.residual_history.push_back(r);
      report.iterations = it;
      report.residual = r;
      if (r <= tol) {
        done = true;
        break;
      }
    }
    const auto& hist = report.residual_history;
    if (hist.size() >= 2 && hist.front() > 0 && hist.back() > 0)
      report.contraction = std::pow(hist.back() / hist.front(), 1.0 / (hist.size() - 1));
    if (!done)
      throw Error(ErrorCode::NoConvergence, "residual " + std::to_string(report.residual) + " after " +
                                                std::to_string(max_iter) + " iterations, contraction estimate " +
                                                std::to_string(report.contraction));
  }
  tr.beurling(omega, s_omega);
  std::vector<Complex> c_omega;
  tr.cauchy(omega, c_omega);
  ComplexField fwd(g), dphi(g), dbar(g);
  for (std::size_t q = 0; q < total; ++q) {
    fwd.values[q] = g.node(q) + c_omega[q];
    dphi.values[q] = 1.0 + s_omega[q];
    dbar.values[q] = omega[q];
  }
  QCMap phi = make_qcmap(g, std::move(fwd), std::move(dphi), std::move(dbar));
  phi.beltrami = mu;
  phi.K = (1 + k) / (1 - k);
  phi.report = report;
  phi.normalization = "principal";
  return phi;
}

}  // namespace qclab
