#include "qclab/matrix_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "qclab/grid_io.hpp"
#include "qclab/qc_map.hpp"

namespace qclab {

MatrixField::MatrixField(const Grid2D& g)
    : grid(g), a11(g.size(), 1.0), a12(g.size(), 0.0), a21(g.size(), 0.0), a22(g.size(), 1.0) {
  symmetric = true;
  const_det = true;
}

MatrixField MatrixField::constant(const Grid2D& g, const Mat2& m) {
  MatrixField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f.set(k, m);
  f.detect_flags();
  return f;
}

MatrixField MatrixField::from_function(const Grid2D& g, const std::function<Mat2(Point)>& fn) {
  MatrixField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f.set(k, fn(g.node(k)));
  f.detect_flags();
  return f;
}

Mat2 MatrixField::at(std::size_t k) const {
  Mat2 m;
  m << a11[k], a12[k], a21[k], a22[k];
  return m;
}

void MatrixField::set(std::size_t k, const Mat2& m) {
  a11[k] = m(0, 0);
  a12[k] = m(0, 1);
  a21[k] = m(1, 0);
  a22[k] = m(1, 1);
}

Mat2 MatrixField::eval(Point z) const {
  const double x = std::clamp(grid.fx(z), 0.0, static_cast<double>(grid.nx - 1));
  const double y = std::clamp(grid.fy(z), 0.0, static_cast<double>(grid.ny - 1));
  const int i = std::max(0, std::min(static_cast<int>(x), grid.nx - 2));
  const int j = std::max(0, std::min(static_cast<int>(y), grid.ny - 2));
  if (grid.nx < 2 || grid.ny < 2) return at(0);
  const double tx = x - i, ty = y - j;
  return (1 - ty) * ((1 - tx) * at(i, j) + tx * at(i + 1, j)) + ty * ((1 - tx) * at(i, j + 1) + tx * at(i + 1, j + 1));
}

MatrixField MatrixField::transposed() const {
  MatrixField t = *this;
  std::swap(t.a12, t.a21);
  return t;
}

void MatrixField::detect_flags() {
  symmetric = true;
  const_det = true;
  if (grid.size() == 0) return;
  const double det0 = a11[0] * a22[0] - a12[0] * a21[0];
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(a12[k] - a21[k]) > kSymmetryTol) symmetric = false;
    if (std::abs(a11[k] * a22[k] - a12[k] * a21[k] - det0) > kDetTol) const_det = false;
  }
}

namespace {

double min_eig_sym(double a, double b, double d) {
  // eigenvalues of [[a, b], [b, d]]
  const double m = 0.5 * (a + d);
  const double r = std::hypot(0.5 * (a - d), b);
  return m - r;
}

double op_norm(const Mat2& a) {
  const double p = std::hypot(a(0, 0) + a(1, 1), a(1, 0) - a(0, 1));
  const double q = std::hypot(a(0, 0) - a(1, 1), a(0, 1) + a(1, 0));
  return 0.5 * (p + q);
}

double det_tol_ok(const MatrixField& a) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.grid.size(); ++k)
    worst = std::max(worst, std::abs(a.a11[k] * a.a22[k] - a.a12[k] * a.a21[k] - 1.0));
  return worst;
}

void require_sym_det1(const MatrixField& a, const char* what) {
  if (!a.symmetric || !a.const_det || det_tol_ok(a) > kDetTol)
    throw Error(ErrorCode::NotApplicable, std::string(what) + " needs a symmetric field with det 1");
}

}  // namespace

double cell_lambda(const Mat2& a) {
  const double lmin = min_eig_sym(a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), a(1, 1));
  if (!(lmin > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(1.0 / lmin, op_norm(a));
}

double k_lambda(double lambda, bool symmetric) {
  if (symmetric) return lambda;
  return lambda + std::sqrt(std::max(0.0, lambda * lambda - 1.0));
}

EllipticityReport ellipticity_constant(const MatrixField& a, const std::vector<std::uint8_t>& region) {
  const Grid2D& g = a.grid;
  if (!region.empty() && region.size() != g.size())
    throw Error(ErrorCode::NotElliptic, "region mask does not match the grid");
  EllipticityReport rep;
  rep.lambda_map = RealField(g, 0.0);
  rep.symmetric = a.symmetric;
  bool any = false;
  double lam = 1.0, two = 1.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!region.empty() && !region[k]) continue;
    const Mat2 m = a.at(k);
    if (!m.allFinite()) throw Error(ErrorCode::NotElliptic, "non-finite entry");
    const double l = cell_lambda(m);
    if (!std::isfinite(l)) throw Error(ErrorCode::NotElliptic, "symmetric part not positive definite at cell " + std::to_string(k));
    rep.lambda_map.values[k] = l;
    lam = std::max(lam, l);
    const Mat2 inv = m.inverse();
    const double l1 = min_eig_sym(m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1));
    const double l2 = min_eig_sym(inv(0, 0), 0.5 * (inv(0, 1) + inv(1, 0)), inv(1, 1));
    two = std::max({two, 1.0 / l1, l2 > 0 ? 1.0 / l2 : std::numeric_limits<double>::infinity()});
    any = true;
  }
  if (!any) throw Error(ErrorCode::NotElliptic, "empty region");
  rep.lambda_global = lam;
  rep.K = k_lambda(lam, a.symmetric);
  rep.lambda_two_sided = two;
  rep.K_beltrami = a.symmetric ? rep.K : std::max(rep.K, k_lambda(two, false));
  return rep;
}

double BeltramiField::sup_mu() const {
  double s = 0.0;
  for (const auto& v : mu.values) s = std::max(s, std::abs(v));
  return s;
}

void BeltramiField::update_support() {
  support_radius = 0.0;
  sup_sum = 0.0;
  const Grid2D& g = mu.grid;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double s = std::abs(mu.values[k]) + (nu.values.empty() ? 0.0 : std::abs(nu.values[k]));
    sup_sum = std::max(sup_sum, s);
    if (s > 0.0) support_radius = std::max(support_radius, std::abs(g.node(k)));
  }
}

std::pair<Complex, Complex> beltrami_pair(const Mat2& a) {
  const double a11 = a(0, 0), a12 = a(0, 1), a21 = a(1, 0), a22 = a(1, 1);
  const double den = (1 + a11) * (1 + a22) - a12 * a21;
  const double det = a11 * a22 - a12 * a21;
  return {Complex(a22 - a11, -(a12 + a21)) / den, Complex(1 - det, a12 - a21) / den};
}

BeltramiField beltrami_coefficients(const MatrixField& a) {
  const Grid2D& g = a.grid;
  BeltramiField b(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Mat2 m = a.at(k);
    const double den = (1 + m(0, 0)) * (1 + m(1, 1)) - m(0, 1) * m(1, 0);
    if (den < 1e-9) throw Error(ErrorCode::DegenerateDenominator, "det(Id + A) < 1e-9 at cell " + std::to_string(k));
    const auto [mu, nu] = beltrami_pair(m);
    b.mu.values[k] = mu;
    b.nu.values[k] = nu;
  }
  b.update_support();
  const EllipticityReport rep = ellipticity_constant(a);
  b.bound = (rep.K_beltrami - 1) / (rep.K_beltrami + 1);
  b.bound_holds = b.sup_sum <= b.bound + 1e-12;
  return b;
}

MuForSolution mu_for_solution(const MatrixField& a, const ComplexField& grad_u) {
  const Grid2D& g = a.grid;
  if (!(grad_u.grid == g)) throw Error(ErrorCode::NotApplicable, "gradient grid differs from matrix grid");
  MuForSolution out;
  out.field = BeltramiField(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Mat2 m = a.at(k);
    const auto [mu, nu] = beltrami_pair(m);
    const double ux = grad_u.values[k].real(), uy = grad_u.values[k].imag();
    const double re = (1 + m(0, 0)) * ux + m(0, 1) * uy;
    const double im = m(1, 0) * ux + (1 + m(1, 1)) * uy;
    const Complex num(re, im), den(re, -im);
    Complex val = mu;
    if (nu != Complex(0.0, 0.0)) {
      if (std::abs(den) > 1e-14 * (1.0 + std::abs(grad_u.values[k]))) val = mu + nu * num / den;
      else ++out.degenerate_cells;
    }
    out.field.mu.values[k] = val;
  }
  out.field.update_support();
  return out;
}

Mat2 interpolate_det1(const Mat2& a, double t) {
  const double a11 = a(0, 0), a12 = a(0, 1), a22 = a(1, 1);
  const double den = a11 * (1 - t * t) + a22 * (1 - t * t) + 2 * (1 + t * t);
  Mat2 r;
  r(0, 0) = (a11 * (1 + t) * (1 + t) + a22 * (t - 1) * (t - 1) + 2 * (1 - t * t)) / den;
  r(0, 1) = r(1, 0) = 4 * t * a12 / den;
  r(1, 1) = (a11 * (t - 1) * (t - 1) + (1 + t) * (a22 * (1 + t) + 2 * (1 - t))) / den;
  return r;
}

MatrixField interpolate_det1(const MatrixField& a, const RealField& cutoff) {
  require_sym_det1(a, "interpolate_det1");
  if (!(cutoff.grid == a.grid)) throw Error(ErrorCode::NotApplicable, "cutoff grid differs from matrix grid");
  MatrixField out(a.grid);
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    const double t = cutoff.values[k];
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::NotApplicable, "cutoff outside [0, 1]");
    out.set(k, interpolate_det1(a.at(k), t));
  }
  out.detect_flags();
  return out;
}

Mat2 spd_sqrt(const Mat2& c) {
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if (!c.allFinite() || std::abs(c(0, 1) - c(1, 0)) > 1e-12 * scale) throw Error(ErrorCode::NotSPD, "matrix not symmetric");
  const double det = c.determinant();
  if (!(c(0, 0) > 0.0) || !(det > 0.0)) throw Error(ErrorCode::NotSPD, "matrix not positive definite");
  const double sd = std::sqrt(det);
  Mat2 s = (c + sd * Mat2::Identity()) / std::sqrt(c.trace() + 2 * sd);
  s(1, 0) = s(0, 1);
  return s;
}

Mat2 FrozenField::source_at(Point z) const {
  const Mat2 m = source->eval(z);
  return det > 0.0 ? Mat2(m * std::sqrt(det / m.determinant())) : m;
}

Mat2 FrozenField::value(Point z) const {
  const Mat2 st_inv = s.transpose().inverse();
  const Eigen::Vector2d v = s.transpose() * Eigen::Vector2d(z.real(), z.imag());
  return Mat2::Identity() + st_inv * (source_at(Point(v(0), v(1))) - c) * s.inverse();
}

FrozenField freeze_and_normalize(const MatrixField& a, Point xi) {
  FrozenField out;
  out.source = std::make_shared<const MatrixField>(a);
  if (a.symmetric && a.const_det) out.det = a.at(0).determinant();
  out.c = out.source_at(xi);
  const Mat2 cs = 0.5 * (out.c + out.c.transpose());
  out.s = spd_sqrt(cs);
  out.lambda = ellipticity_constant(a).lambda_global;
  for (std::size_t k = 0; k < a.grid.size(); ++k)
    out.eps = std::max(out.eps, (a.at(k) - out.c).cwiseAbs().maxCoeff());
  if (out.eps >= 1.0 / (2.0 * out.lambda))
    throw Error(ErrorCode::PerturbationTooLarge, "eps = " + std::to_string(out.eps) + " >= 1/(2 lambda)");
  out.bound = 1.0 / (1.0 - 2.0 * out.eps * out.lambda);

  const Mat2 st_inv = out.s.transpose().inverse();
  const Grid2D& g = a.grid;
  const Point corners[4] = {g.origin, g.node(g.nx - 1, 0), g.node(0, g.ny - 1), g.upper()};
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const Point& p : corners) {
    const Eigen::Vector2d v = st_inv * Eigen::Vector2d(p.real(), p.imag());
    x0 = std::min(x0, v(0));
    y0 = std::min(y0, v(1));
    x1 = std::max(x1, v(0));
    y1 = std::max(y1, v(1));
  }
  const Eigen::Vector2d xp = st_inv * Eigen::Vector2d(xi.real(), xi.imag());
  out.xi_pulled = Point(xp(0), xp(1));
  const double h = g.h;
  const int il = static_cast<int>(std::ceil((xp(0) - x0) / h - 1e-9));
  const int jl = static_cast<int>(std::ceil((xp(1) - y0) / h - 1e-9));
  const int ir = static_cast<int>(std::ceil((x1 - xp(0)) / h - 1e-9));
  const int jr = static_cast<int>(std::ceil((y1 - xp(1)) / h - 1e-9));
  Grid2D mg;
  mg.h = h;
  mg.origin = out.xi_pulled - Point(il * h, jl * h);
  mg.nx = il + ir + 1;
  mg.ny = jl + jr + 1;
  out.m = MatrixField(mg);
  for (std::size_t k = 0; k < mg.size(); ++k) out.m.set(k, out.value(mg.node(k)));
  // the frozen node itself is Id by construction; pin it against rounding in S^T S^-T
  out.m.set(mg.index(il, jl), out.value(out.xi_pulled));
  out.m.detect_flags();
  return out;
}

PushforwardResult pushforward_matrix(const MatrixField& a, const QCMap& f) {
  const Grid2D& g = f.grid;
  PushforwardResult out;
  out.field = MatrixField(g);
  out.singular.assign(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Mat2 df = f.differential(k);
    const double det = df.determinant();
    if (!(det > 1e-14)) {
      out.singular[k] = 1;
      ++out.singular_count;
      continue;
    }
    const Mat2 inv = df.inverse();
    out.field.set(k, det * inv * a.eval(f.forward.values[k]) * inv.transpose());
  }
  out.field.detect_flags();
  return out;
}

Mat2 inverse_side_b(const Mat2& a) {
  Mat2 b;
  b << 1.0 / a(0, 0), a(0, 1) / a(0, 0), -a(0, 1) / a(0, 0), 1.0 / a(0, 0);
  return b;
}

Mat2 inverse_side_bstar(const Mat2& a) {
  Mat2 b;
  b << 1.0 / a(1, 1), -a(0, 1) / a(1, 1), a(0, 1) / a(1, 1), 1.0 / a(1, 1);
  return b;
}

InverseSideMatrices inverse_side_matrices(const MatrixField& a, const QCMap& phi, const Grid2D& image_grid) {
  require_sym_det1(a, "inverse_side_matrices");
  const InverseSampler& inv = phi.inverse();
  InverseSideMatrices out{MatrixField(image_grid), MatrixField(image_grid)};
  for (std::size_t k = 0; k < image_grid.size(); ++k) {
    const Mat2 m = a.eval(inv(image_grid.node(k)));
    out.b.set(k, inverse_side_b(m));
    out.bstar.set(k, inverse_side_bstar(m));
  }
  out.b.detect_flags();
  out.bstar.detect_flags();
  ellipticity_constant(out.b);
  ellipticity_constant(out.bstar);
  return out;
}

void write_matrix_field(const MatrixField& a, const std::string& path) {
  GridFile file;
  file.kind = "matrix";
  file.grid = a.grid;
  file.flags["symmetric"] = a.symmetric ? "1" : "0";
  file.flags["const_det"] = a.const_det ? "1" : "0";
  file.blocks = {{"a11", a.a11}, {"a12", a.a12}, {"a21", a.a21}, {"a22", a.a22}};
  write_grid_file(file, path);
}

MatrixField read_matrix_field(const std::string& path) {
  const GridFile file = read_grid_file(path);
  MatrixField a(file.grid);
  a.a11 = file.block("a11");
  a.a12 = file.block("a12");
  a.a21 = file.block("a21");
  a.a22 = file.block("a22");
  for (std::size_t k = 0; k < a.grid.size(); ++k)
    if (!a.at(k).allFinite()) throw Error(ErrorCode::IOError, path + ": non-finite entry");
  a.detect_flags();
  return a;
}

void write_matrix_csv(const MatrixField& a, std::ostream& os) {
  os << "i,j,x,y,a11,a12,a21,a22\n";
  char buf[256];
  for (int j = 0; j < a.grid.ny; ++j)
    for (int i = 0; i < a.grid.nx; ++i) {
      const std::size_t k = a.grid.index(i, j);
      const Point z = a.grid.node(i, j);
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, j, z.real(), z.imag(), a.a11[k],
                    a.a12[k], a.a21[k], a.a22[k]);
      os << buf;
    }
}

}  // namespace qclab
