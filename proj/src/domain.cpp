#include "qclab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qclab {

namespace {

double cross(Point a, Point b) { return a.real() * b.imag() - a.imag() * b.real(); }

int orient(Point a, Point b, Point c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({std::norm(b - a), std::norm(c - a), 1e-300});
  if (std::abs(v) <= 1e-14 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.real(), b.real()) <= p.real() && p.real() <= std::max(a.real(), b.real()) &&
         std::min(a.imag(), b.imag()) <= p.imag() && p.imag() <= std::max(a.imag(), b.imag());
}

bool segments_meet(Point a, Point b, Point c, Point d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  // proper crossing only when no orientation is degenerate; touching and
  // collinear cases go through the bounding-box tests below
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

DomainSpec::DomainSpec(std::string nm, std::vector<std::vector<Point>> loops, std::vector<Point> punctures)
    : name(std::move(nm)), loops_(std::move(loops)), punctures_(std::move(punctures)) {
  if (loops_.empty()) throw Error(ErrorCode::DomainError, "domain needs at least one loop");
  for (auto& l : loops_) {
    if (l.size() >= 2 && l.front() == l.back()) l.pop_back();
    if (l.size() < 3) throw Error(ErrorCode::DomainError, "loop with fewer than 3 vertices");
    for (const auto& p : l)
      if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) throw Error(ErrorCode::DomainError, "non-finite vertex");
  }
  build();
  if (!orientation_ok()) throw Error(ErrorCode::DomainError, "outer loop must be counterclockwise and holes clockwise");
  if (!is_simple()) throw Error(ErrorCode::DomainError, "boundary polylines are not simple and disjoint");
}

int DomainSpec::bucket_x(double x) const {
  return std::clamp(static_cast<int>(std::floor((x - lo_.real()) / cell_)), 0, bx_ - 1);
}

int DomainSpec::bucket_y(double y) const {
  return std::clamp(static_cast<int>(std::floor((y - lo_.imag()) / cell_)), 0, by_ - 1);
}

void DomainSpec::build() {
  lengths_.clear();
  segs_.clear();
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (int l = 0; l < static_cast<int>(loops_.size()); ++l) {
    const auto& v = loops_[l];
    std::vector<double> cum(v.size() + 1, 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point a = v[k], b = v[(k + 1) % v.size()];
      segs_.push_back({a, b, l, cum[k]});
      cum[k + 1] = cum[k] + std::abs(b - a);
      x0 = std::min(x0, a.real());
      y0 = std::min(y0, a.imag());
      x1 = std::max(x1, a.real());
      y1 = std::max(y1, a.imag());
    }
    lengths_.push_back(std::move(cum));
  }
  for (const auto& p : punctures_) {
    x0 = std::min(x0, p.real());
    y0 = std::min(y0, p.imag());
    x1 = std::max(x1, p.real());
    y1 = std::max(y1, p.imag());
  }
  lo_ = Point(x0, y0);
  hi_ = Point(x1, y1);
  const double extent = std::max(x1 - x0, y1 - y0);
  const double per_axis = std::clamp(2.0 * std::sqrt(static_cast<double>(segs_.size())), 8.0, 2048.0);
  cell_ = extent / per_axis * (1.0 + 1e-9);
  bx_ = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cell_)) + 1);
  by_ = std::max(1, static_cast<int>(std::ceil((y1 - y0) / cell_)) + 1);

  std::vector<std::size_t> count(static_cast<std::size_t>(bx_) * by_ + 1, 0);
  auto range = [&](const Segment& s, int& ia, int& ib, int& ja, int& jb) {
    ia = bucket_x(std::min(s.a.real(), s.b.real()));
    ib = bucket_x(std::max(s.a.real(), s.b.real()));
    ja = bucket_y(std::min(s.a.imag(), s.b.imag()));
    jb = bucket_y(std::max(s.a.imag(), s.b.imag()));
  };
  for (const auto& s : segs_) {
    int ia, ib, ja, jb;
    range(s, ia, ib, ja, jb);
    for (int j = ja; j <= jb; ++j)
      for (int i = ia; i <= ib; ++i) ++count[static_cast<std::size_t>(j) * bx_ + i + 1];
  }
  for (std::size_t b = 1; b < count.size(); ++b) count[b] += count[b - 1];
  start_ = count;
  items_.resize(count.back());
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (std::size_t q = 0; q < segs_.size(); ++q) {
    int ia, ib, ja, jb;
    range(segs_[q], ia, ib, ja, jb);
    for (int j = ja; j <= jb; ++j)
      for (int i = ia; i <= ib; ++i) items_[fill[static_cast<std::size_t>(j) * bx_ + i]++] = static_cast<std::uint32_t>(q);
  }

  // signed distance cache: 256 nodes across the larger side plus a margin
  const double h = extent / 256.0;
  sdf_ = RealField(Grid2D::covering(lo_, hi_, h, 4));
  for (std::size_t k = 0; k < sdf_.grid.size(); ++k) sdf_.values[k] = signed_distance(sdf_.grid.node(k));
}

double DomainSpec::segment_distance(const Segment& s, Point p, Point& q, double& t) const {
  const Point d = s.b - s.a;
  const double len2 = std::norm(d);
  t = len2 > 0 ? std::clamp(((p - s.a) * std::conj(d)).real() / len2, 0.0, 1.0) : 0.0;
  q = s.a + t * d;
  return std::abs(p - q);
}

bool DomainSpec::contains(Point p) const {
  if (p.real() < lo_.real() || p.real() > hi_.real() || p.imag() < lo_.imag() || p.imag() > hi_.imag()) return false;
  for (const auto& c : punctures_)
    if (p == c) return false;
  const int row = bucket_y(p.imag());
  int crossings = 0;
  for (int col = bucket_x(p.real()); col < bx_; ++col) {
    const std::size_t b = static_cast<std::size_t>(row) * bx_ + col;
    for (std::size_t q = start_[b]; q < start_[b + 1]; ++q) {
      const Segment& s = segs_[items_[q]];
      if ((s.a.imag() > p.imag()) == (s.b.imag() > p.imag())) continue;
      const double xc = s.a.real() + (p.imag() - s.a.imag()) * (s.b.real() - s.a.real()) / (s.b.imag() - s.a.imag());
      if (xc > p.real() && bucket_x(xc) == col) ++crossings;
    }
  }
  return crossings % 2 == 1;
}

BoundaryLocation DomainSpec::closest_point(Point p) const {
  BoundaryLocation best;
  best.dist = std::numeric_limits<double>::infinity();
  const int cx = bucket_x(p.real()), cy = bucket_y(p.imag());
  const int rmax = std::max(bx_, by_);
  for (int r = 0; r <= rmax; ++r) {
    for (int j = cy - r; j <= cy + r; ++j) {
      if (j < 0 || j >= by_) continue;
      const bool edge_row = (j == cy - r || j == cy + r);
      for (int i = cx - r; i <= cx + r; i += (edge_row ? 1 : 2 * r)) {
        if (i >= 0 && i < bx_) {
          const std::size_t b = static_cast<std::size_t>(j) * bx_ + i;
          for (std::size_t q = start_[b]; q < start_[b + 1]; ++q) {
            const Segment& s = segs_[items_[q]];
            Point c;
            double t;
            const double d = segment_distance(s, p, c, t);
            if (d < best.dist) {
              best.dist = d;
              best.point = c;
              best.loop = s.loop;
              best.s = s.s0 + t * std::abs(s.b - s.a);
            }
          }
        }
        if (r == 0) break;
      }
    }
    // everything not yet visited lies outside the block of buckets around (cx, cy)
    const double bx0 = lo_.real() + (cx - r) * cell_, bx1 = lo_.real() + (cx + r + 1) * cell_;
    const double by0 = lo_.imag() + (cy - r) * cell_, by1 = lo_.imag() + (cy + r + 1) * cell_;
    const bool covers_all = cx - r <= 0 && cy - r <= 0 && cx + r >= bx_ - 1 && cy + r >= by_ - 1;
    if (covers_all) break;
    const double margin = std::min({p.real() - bx0, bx1 - p.real(), p.imag() - by0, by1 - p.imag()});
    if (best.dist <= margin) break;
  }
  for (std::size_t k = 0; k < punctures_.size(); ++k) {
    const double d = std::abs(p - punctures_[k]);
    if (d < best.dist) {
      best.dist = d;
      best.point = punctures_[k];
      best.loop = -1 - static_cast<int>(k);
      best.s = 0.0;
    }
  }
  return best;
}

double DomainSpec::distance(Point p) const { return closest_point(p).dist; }

double DomainSpec::signed_distance(Point p) const {
  const double d = distance(p);
  return contains(p) ? -d : d;
}

double DomainSpec::safe_distance(Point p) const {
  const Grid2D& g = sdf_.grid;
  const double fx = g.fx(p), fy = g.fy(p);
  if (fx >= 0 && fy >= 0 && fx <= g.nx - 1 && fy <= g.ny - 1) {
    const int i = static_cast<int>(std::lround(fx)), j = static_cast<int>(std::lround(fy));
    const double bound = std::abs(sdf_(i, j)) - std::abs(p - g.node(i, j));
    if (bound > 2.0 * g.h) return bound;
  }
  return distance(p);
}

double DomainSpec::perimeter() const {
  double s = 0.0;
  for (const auto& l : lengths_) s += l.back();
  return s;
}

Point DomainSpec::point_at(int loop, double s) const {
  const auto& cum = lengths_[loop];
  const auto& v = loops_[loop];
  const double total = cum.back();
  s = std::fmod(s, total);
  if (s < 0) s += total;
  const std::size_t k = std::min<std::size_t>(
      static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin()) - 1, v.size() - 1);
  const double len = cum[k + 1] - cum[k];
  const double t = len > 0 ? (s - cum[k]) / len : 0.0;
  return v[k] + t * (v[(k + 1) % v.size()] - v[k]);
}

double DomainSpec::loop_area(int loop) const {
  const auto& v = loops_[loop];
  double a = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) a += cross(v[k], v[(k + 1) % v.size()]);
  return 0.5 * a;
}

double DomainSpec::area() const {
  double a = 0.0;
  for (int l = 0; l < static_cast<int>(loops_.size()); ++l) a += loop_area(l);
  return a;
}

bool DomainSpec::first_crossing(Point a, Point b, double& t, BoundaryLocation& where) const {
  t = 2.0;
  const Point d = b - a;
  const int ia = bucket_x(std::min(a.real(), b.real())), ib = bucket_x(std::max(a.real(), b.real()));
  const int ja = bucket_y(std::min(a.imag(), b.imag())), jb = bucket_y(std::max(a.imag(), b.imag()));
  for (int j = ja; j <= jb; ++j)
    for (int i = ia; i <= ib; ++i) {
      const std::size_t bk = static_cast<std::size_t>(j) * bx_ + i;
      for (std::size_t q = start_[bk]; q < start_[bk + 1]; ++q) {
        const Segment& s = segs_[items_[q]];
        const Point e = s.b - s.a;
        const double den = cross(d, e);
        if (den == 0.0) continue;
        const double tt = cross(s.a - a, e) / den;
        const double uu = cross(s.a - a, d) / den;
        if (tt > 1e-12 && tt <= 1.0 && uu >= 0.0 && uu <= 1.0 && tt < t) {
          t = tt;
          where.point = a + tt * d;
          where.loop = s.loop;
          where.s = s.s0 + uu * std::abs(e);
          where.dist = 0.0;
        }
      }
    }
  const double len2 = std::norm(d);
  for (std::size_t k = 0; k < punctures_.size(); ++k) {
    const Point c = punctures_[k];
    const double tt = len2 > 0 ? ((c - a) * std::conj(d)).real() / len2 : -1.0;
    if (tt > 1e-12 && tt <= 1.0 && std::abs(a + tt * d - c) <= 1e-12 * (1.0 + std::abs(c)) && tt < t) {
      t = tt;
      where.point = c;
      where.loop = -1 - static_cast<int>(k);
      where.s = 0.0;
      where.dist = 0.0;
    }
  }
  return t <= 1.0;
}

bool DomainSpec::is_simple() const {
  const std::size_t n = segs_.size();
  std::vector<std::size_t> loop_first(loops_.size());
  for (std::size_t q = n; q-- > 0;) loop_first[segs_[q].loop] = q;
  auto adjacent = [&](std::size_t p, std::size_t q) {
    if (segs_[p].loop != segs_[q].loop) return false;
    const std::size_t m = loops_[segs_[p].loop].size();
    const std::size_t ip = p - loop_first[segs_[p].loop], iq = q - loop_first[segs_[q].loop];
    return (ip + 1) % m == iq || (iq + 1) % m == ip;
  };
  for (std::size_t b = 0; b + 1 < start_.size(); ++b)
    for (std::size_t x = start_[b]; x < start_[b + 1]; ++x)
      for (std::size_t y = x + 1; y < start_[b + 1]; ++y) {
        const std::size_t p = items_[x], q = items_[y];
        if (p == q || adjacent(p, q)) continue;
        if (segments_meet(segs_[p].a, segs_[p].b, segs_[q].a, segs_[q].b)) return false;
      }
  return true;
}

bool DomainSpec::orientation_ok() const {
  if (!(loop_area(0) > 0)) return false;
  for (int l = 1; l < static_cast<int>(loops_.size()); ++l)
    if (!(loop_area(l) < 0)) return false;
  return true;
}

std::vector<Point> DomainSpec::boundary_samples(double ds) const {
  std::vector<Point> out;
  for (const auto& s : segs_) {
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(s.b - s.a) / ds)));
    for (int k = 0; k < pieces; ++k) out.push_back(s.a + (static_cast<double>(k) / pieces) * (s.b - s.a));
  }
  return out;
}

}  // namespace qclab
