#include "qclab/qc_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "qclab/grid_io.hpp"

namespace qclab {

QCMap make_qcmap(const Grid2D& g, ComplexField forward, ComplexField dphi, ComplexField dbarphi) {
  QCMap m;
  m.grid = g;
  m.forward = std::move(forward);
  m.dphi = std::move(dphi);
  m.dbarphi = std::move(dbarphi);
  m.beltrami = BeltramiField(g);
  double k = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = std::abs(m.dphi.values[i]);
    if (a > 0) {
      const Complex mu = m.dbarphi.values[i] / m.dphi.values[i];
      m.beltrami.mu.values[i] = mu;
      k = std::max(k, std::abs(mu));
    }
  }
  m.beltrami.update_support();
  m.K = k < 1.0 ? (1 + k) / (1 - k) : std::numeric_limits<double>::infinity();
  m.finish();
  return m;
}

void QCMap::finish() {
  displacement_ = ComplexField(grid);
  jacobian = RealField(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    displacement_.values[k] = forward.values[k] - grid.node(k);
    jacobian.values[k] = std::norm(dphi.values[k]) - std::norm(dbarphi.values[k]);
  }
  inverse_.reset();
}

QCMap QCMap::from_samples(const Grid2D& g, ComplexField fwd) {
  ComplexField a = d_z(fwd);
  ComplexField b = d_zbar(fwd);
  return make_qcmap(g, std::move(fwd), std::move(a), std::move(b));
}

QCMap QCMap::from_function(const Grid2D& g, const std::function<Point(Point)>& fn) {
  ComplexField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f.values[k] = fn(g.node(k));
  return from_samples(g, std::move(f));
}

QCMap QCMap::identity(const Grid2D& g) {
  ComplexField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f.values[k] = g.node(k);
  return make_qcmap(g, std::move(f), ComplexField(g, Complex(1.0, 0.0)), ComplexField(g));
}

Point QCMap::operator()(Point z) const { return z + bicubic(displacement_, z); }

namespace {

Mat2 real_differential(Complex a, Complex b) {
  const Complex fx = a + b;
  const Complex fy = Complex(0, 1) * (a - b);
  Mat2 m;
  m << fx.real(), fy.real(), fx.imag(), fy.imag();
  return m;
}

}  // namespace

Mat2 QCMap::differential(Point z) const { return real_differential(bilinear(dphi, z), bilinear(dbarphi, z)); }

Mat2 QCMap::differential(std::size_t k) const { return real_differential(dphi.values[k], dbarphi.values[k]); }

double QCMap::positive_jacobian_fraction() const {
  std::size_t total = 0, good = 0;
  for (int j = 1; j + 1 < grid.ny; ++j)
    for (int i = 1; i + 1 < grid.nx; ++i) {
      ++total;
      if (jacobian(i, j) > 0) ++good;
    }
  return total ? static_cast<double>(good) / total : 1.0;
}

const InverseSampler& QCMap::inverse() const {
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  if (!inverse_) inverse_ = std::make_shared<InverseSampler>(*this);
  return *inverse_;
}

InverseSampler::InverseSampler(const QCMap& phi) : phi_(phi), grid_(phi.grid) {
  phi_.inverse_.reset();
  const Grid2D& g = grid_;
  if (g.nx < 2 || g.ny < 2) throw Error(ErrorCode::FoldDetected, "grid too small to triangulate");
  tri_count_ = 2 * static_cast<std::size_t>(g.nx - 1) * (g.ny - 1);
  const auto& f = phi_.forward.values;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& w : f) {
    x0 = std::min(x0, w.real());
    y0 = std::min(y0, w.imag());
    x1 = std::max(x1, w.real());
    y1 = std::max(y1, w.imag());
  }
  lo_ = Point(x0, y0);
  hi_ = Point(x1, y1);
  cell_ = 2.0 * g.h;
  bx_ = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cell_)) + 1);
  by_ = std::max(1, static_cast<int>(std::ceil((y1 - y0) / cell_)) + 1);

  auto bucket_range = [&](std::size_t t, int& ia, int& ib, int& ja, int& jb) {
    int i0, j0, i1, j1, i2, j2;
    triangle(t, i0, j0, i1, j1, i2, j2);
    const Point a = f[g.index(i0, j0)], b = f[g.index(i1, j1)], c = f[g.index(i2, j2)];
    const double cross = (b - a).real() * (c - a).imag() - (b - a).imag() * (c - a).real();
    if (!(cross > 0.0))
      throw Error(ErrorCode::FoldDetected, "image triangle " + std::to_string(t) + " is not positively oriented");
    const double tx0 = std::min({a.real(), b.real(), c.real()}), tx1 = std::max({a.real(), b.real(), c.real()});
    const double ty0 = std::min({a.imag(), b.imag(), c.imag()}), ty1 = std::max({a.imag(), b.imag(), c.imag()});
    ia = std::clamp(static_cast<int>((tx0 - x0) / cell_), 0, bx_ - 1);
    ib = std::clamp(static_cast<int>((tx1 - x0) / cell_), 0, bx_ - 1);
    ja = std::clamp(static_cast<int>((ty0 - y0) / cell_), 0, by_ - 1);
    jb = std::clamp(static_cast<int>((ty1 - y0) / cell_), 0, by_ - 1);
  };

  std::vector<std::size_t> count(static_cast<std::size_t>(bx_) * by_ + 1, 0);
  for (std::size_t t = 0; t < tri_count_; ++t) {
    int ia, ib, ja, jb;
    bucket_range(t, ia, ib, ja, jb);
    for (int jj = ja; jj <= jb; ++jj)
      for (int ii = ia; ii <= ib; ++ii) ++count[static_cast<std::size_t>(jj) * bx_ + ii + 1];
  }
  for (std::size_t b = 1; b < count.size(); ++b) count[b] += count[b - 1];
  start_ = count;
  items_.resize(count.back());
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (std::size_t t = 0; t < tri_count_; ++t) {
    int ia, ib, ja, jb;
    bucket_range(t, ia, ib, ja, jb);
    for (int jj = ja; jj <= jb; ++jj)
      for (int ii = ia; ii <= ib; ++ii) items_[fill[static_cast<std::size_t>(jj) * bx_ + ii]++] = static_cast<std::uint32_t>(t);
  }
}

void InverseSampler::triangle(std::size_t t, int& i0, int& j0, int& i1, int& j1, int& i2, int& j2) const {
  const std::size_t cell = t / 2;
  const int i = static_cast<int>(cell % (grid_.nx - 1));
  const int j = static_cast<int>(cell / (grid_.nx - 1));
  i0 = i;
  j0 = j;
  if (t % 2 == 0) {
    i1 = i + 1, j1 = j;
    i2 = i + 1, j2 = j + 1;
  } else {
    i1 = i + 1, j1 = j + 1;
    i2 = i, j2 = j + 1;
  }
}

bool InverseSampler::locate(Point w, Point& z) const {
  const double fx = (w.real() - lo_.real()) / cell_;
  const double fy = (w.imag() - lo_.imag()) / cell_;
  if (fx < 0 || fy < 0 || fx >= bx_ || fy >= by_) return false;
  const std::size_t b = static_cast<std::size_t>(fy) * bx_ + static_cast<std::size_t>(fx);
  const auto& f = phi_.forward.values;
  // items are stored in increasing triangle order, so the first hit is the lowest index
  for (std::size_t q = start_[b]; q < start_[b + 1]; ++q) {
    int i0, j0, i1, j1, i2, j2;
    triangle(items_[q], i0, j0, i1, j1, i2, j2);
    const Point a = f[grid_.index(i0, j0)], p = f[grid_.index(i1, j1)], c = f[grid_.index(i2, j2)];
    const Point e1 = p - a, e2 = c - a, d = w - a;
    const double det = e1.real() * e2.imag() - e1.imag() * e2.real();
    const double l1 = (d.real() * e2.imag() - d.imag() * e2.real()) / det;
    const double l2 = (e1.real() * d.imag() - e1.imag() * d.real()) / det;
    const double tol = -1e-12;
    if (l1 >= tol && l2 >= tol && 1 - l1 - l2 >= tol) {
      z = (1 - l1 - l2) * grid_.node(i0, j0) + l1 * grid_.node(i1, j1) + l2 * grid_.node(i2, j2);
      return true;
    }
  }
  return false;
}

bool InverseSampler::in_image(Point w) const {
  Point z;
  return locate(w, z);
}

Point InverseSampler::operator()(Point w) const {
  Point z;
  if (!locate(w, z)) {
    // outside the sampled image: the principal map is close to the identity there
    z = w;
    for (int it = 0; it < 20; ++it) z -= phi_(z) - w;
    return z;
  }
  for (int it = 0; it < 3; ++it) {
    const Point r = phi_(z) - w;
    if (std::abs(r) < 1e-14 * (1 + std::abs(w))) break;
    const Mat2 d = phi_.differential(z);
    const double det = d.determinant();
    if (!(det > 0)) break;
    const Eigen::Vector2d step = d.inverse() * Eigen::Vector2d(r.real(), r.imag());
    const Point nz = z - Point(step(0), step(1));
    if (std::abs(nz - z) > 2 * grid_.h) break;
    z = nz;
  }
  return z;
}

const InverseSampler& invert_map(const QCMap& phi) { return phi.inverse(); }

QCMap inverse_as_map(const QCMap& phi, const Grid2D& image_grid) {
  const InverseSampler& inv = phi.inverse();
  ComplexField f(image_grid);
  for (std::size_t k = 0; k < image_grid.size(); ++k) f.values[k] = inv(image_grid.node(k));
  QCMap m = QCMap::from_samples(image_grid, std::move(f));
  m.normalization = "inverse";
  return m;
}

void write_qcmap(const QCMap& phi, const std::string& path, const std::map<std::string, std::string>& extra_flags) {
  GridFile f;
  f.flags = extra_flags;
  f.kind = "qcmap";
  f.grid = phi.grid;
  std::ostringstream k;
  k.precision(17);
  k << phi.K;
  f.flags["K"] = k.str();
  f.flags["normalization"] = phi.normalization;
  auto split = [&](const std::string& name, const ComplexField& c) {
    std::vector<double> re(c.values.size()), im(c.values.size());
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      re[i] = c.values[i].real();
      im[i] = c.values[i].imag();
    }
    f.blocks.emplace_back(name + "_re", std::move(re));
    f.blocks.emplace_back(name + "_im", std::move(im));
  };
  split("fwd", phi.forward);
  f.blocks.emplace_back("jacobian", phi.jacobian.values);
  split("dz", phi.dphi);
  split("dzbar", phi.dbarphi);
  write_grid_file(f, path);
}

QCMap read_qcmap(const std::string& path) {
  const GridFile f = read_grid_file(path);
  if (f.kind != "qcmap") throw Error(ErrorCode::IOError, path + ": not a qcmap grid file");
  auto join = [&](const std::string& name) {
    ComplexField c(f.grid);
    const auto& re = f.block(name + "_re");
    const auto& im = f.block(name + "_im");
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = Complex(re[i], im[i]);
    return c;
  };
  QCMap m = make_qcmap(f.grid, join("fwd"), join("dz"), join("dzbar"));
  if (auto it = f.flags.find("normalization"); it != f.flags.end()) m.normalization = it->second;
  return m;
}

}  // namespace qclab
