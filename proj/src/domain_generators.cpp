#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "qclab/domain.hpp"
#include "qclab/qc_map.hpp"

namespace qclab {

int BoundaryPartition::arc_of(int loop, double s) const {
  // arcs are stored by loop, then by s0
  auto first = std::lower_bound(arcs.begin(), arcs.end(), loop, [](const Arc& a, int l) { return a.loop < l; });
  auto last = std::upper_bound(first, arcs.end(), loop, [](int l, const Arc& a) { return l < a.loop; });
  if (first == last) return -1;
  auto it = std::upper_bound(first, last, s, [](double v, const Arc& a) { return v < a.s0; });
  if (it == first) return static_cast<int>(last - arcs.begin()) - 1;  // wraps to the last arc
  --it;
  return static_cast<int>(it - arcs.begin());
}

BoundaryPartition boundary_partition(const DomainSpec& omega, int m) {
  const int nl = static_cast<int>(omega.loops().size());
  if (m < 4 || m < nl) throw Error(ErrorCode::DomainError, "partition needs m >= 4 and at least one arc per loop");
  const double total = omega.perimeter();
  std::vector<int> count(nl, 1);
  int used = nl;
  std::vector<std::pair<double, int>> rem;
  for (int l = 0; l < nl; ++l) {
    const double quota = m * omega.loop_length(l) / total;
    const int extra = std::max(0, static_cast<int>(std::floor(quota)) - 1);
    count[l] += extra;
    used += extra;
    rem.emplace_back(quota - count[l], l);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  for (std::size_t k = 0; used < m; k = (k + 1) % rem.size(), ++used) ++count[rem[k].second];
  BoundaryPartition p;
  for (int l = 0; l < nl; ++l) {
    const double len = omega.loop_length(l);
    for (int k = 0; k < count[l]; ++k) {
      Arc a;
      a.loop = l;
      a.s0 = len * k / count[l];
      a.s1 = k + 1 == count[l] ? len : len * (k + 1) / count[l];
      p.arcs.push_back(a);
    }
  }
  return p;
}

namespace {

double bend(Point a, Point m, Point b) {
  const Point u = m - a, v = b - m;
  if (std::abs(u) == 0 || std::abs(v) == 0) return 0.0;
  return std::abs(std::arg(v / u));
}

void refine(const QCMap& phi, Point a, Point b, Point fa, Point fb, int depth, std::vector<Point>& out) {
  const Point m = 0.5 * (a + b);
  const Point fm = phi(m);
  if (depth < 8 && bend(fa, fm, fb) > 5.0 * kPi / 180.0) {
    refine(phi, a, m, fa, fm, depth + 1, out);
    out.push_back(fm);
    refine(phi, m, b, fm, fb, depth + 1, out);
  }
}

}  // namespace

MappedDomain map_domain(const DomainSpec& omega, const QCMap& phi, const BoundaryPartition& partition) {
  std::vector<std::vector<Point>> images;
  std::vector<std::vector<double>> image_breaks(omega.loops().size());
  for (int l = 0; l < static_cast<int>(omega.loops().size()); ++l) {
    const auto& v = omega.loops()[l];
    // source breakpoints: vertices and arc ends, tagged with arclength
    std::vector<std::pair<double, int>> marks;  // (s, arc index or -1)
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      marks.emplace_back(s, -1);
      s += std::abs(v[(k + 1) % v.size()] - v[k]);
    }
    std::vector<int> arcs_here;
    for (int a = 0; a < static_cast<int>(partition.arcs.size()); ++a)
      if (partition.arcs[a].loop == l) {
        marks.emplace_back(partition.arcs[a].s0, a);
        arcs_here.push_back(a);
      }
    std::stable_sort(marks.begin(), marks.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<Point> src;
    std::vector<int> tag;
    for (const auto& [ms, a] : marks) {
      const Point p = omega.point_at(l, ms);
      if (!src.empty() && std::abs(p - src.back()) < 1e-14) {
        if (a >= 0) tag.back() = a;
        continue;
      }
      src.push_back(p);
      tag.push_back(a);
    }
    std::vector<Point> img;
    std::vector<int> img_tag;
    std::vector<Point> fsrc(src.size());
    for (std::size_t k = 0; k < src.size(); ++k) fsrc[k] = phi(src[k]);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const std::size_t k1 = (k + 1) % src.size();
      img.push_back(fsrc[k]);
      img_tag.push_back(tag[k]);
      std::vector<Point> mid;
      refine(phi, src[k], src[k1], fsrc[k], fsrc[k1], 0, mid);
      for (const auto& p : mid) {
        img.push_back(p);
        img_tag.push_back(-1);
      }
    }
    // image arclength of every tagged breakpoint
    double acc = 0.0;
    std::vector<double> where(partition.arcs.size(), -1.0);
    for (std::size_t k = 0; k < img.size(); ++k) {
      if (img_tag[k] >= 0) where[img_tag[k]] = acc;
      acc += std::abs(img[(k + 1) % img.size()] - img[k]);
    }
    for (int a : arcs_here) image_breaks[l].push_back(where[a]);
    image_breaks[l].push_back(acc);
    images.push_back(std::move(img));
  }
  std::vector<Point> punct;
  for (const auto& c : omega.punctures()) punct.push_back(phi(c));
  MappedDomain out;
  try {
    out.domain = DomainSpec(omega.name + "-image", std::move(images), std::move(punct));
  } catch (const Error& e) {
    throw Error(ErrorCode::FoldDetected, std::string("image boundary invalid near the boundary: ") + e.what());
  }
  for (int l = 0; l < static_cast<int>(omega.loops().size()); ++l) {
    int idx = 0;
    for (int a = 0; a < static_cast<int>(partition.arcs.size()); ++a) {
      if (partition.arcs[a].loop != l) continue;
      Arc arc;
      arc.loop = l;
      arc.s0 = image_breaks[l][idx];
      arc.s1 = image_breaks[l][idx + 1];
      arc.source = a;
      out.partition.arcs.push_back(arc);
      ++idx;
    }
  }
  return out;
}

DomainSpec map_domain(const DomainSpec& omega, const QCMap& phi) {
  return map_domain(omega, phi, BoundaryPartition{}).domain;
}

DomainSpec make_disk(Point center, double radius, int n_vertices) {
  if (!(radius > 0) || n_vertices < 16) throw Error(ErrorCode::DomainError, "disk needs radius > 0 and n >= 16");
  std::vector<Point> v(n_vertices);
  for (int k = 0; k < n_vertices; ++k) v[k] = center + std::polar(radius, 2.0 * kPi * k / n_vertices);
  return DomainSpec("disk", {v});
}

DomainSpec make_square(Point center, double side, int per_side) {
  if (!(side > 0) || per_side < 1) throw Error(ErrorCode::DomainError, "square needs side > 0");
  const Point corners[4] = {center + Point(-side / 2, -side / 2), center + Point(side / 2, -side / 2),
                            center + Point(side / 2, side / 2), center + Point(-side / 2, side / 2)};
  std::vector<Point> v;
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < per_side; ++k)
      v.push_back(corners[c] + (static_cast<double>(k) / per_side) * (corners[(c + 1) % 4] - corners[c]));
  return DomainSpec("square", {v});
}

DomainSpec make_punctured_disk(Point center, double radius, int n_vertices) {
  DomainSpec d = make_disk(center, radius, n_vertices);
  return DomainSpec("punctured-disk", d.loops(), {center});
}

double snowflake_angle(double d) {
  const double dmax = std::log(4.0) / std::log(3.0);
  if (!(d > 1.0) || d > dmax + 1e-12) throw Error(ErrorCode::BadDimension, "snowflake dimension must lie in (1, log4/log3]");
  // similarity dimension of the generator with bump angle theta: log 4 / log(2 + 2 cos theta)
  auto dim = [](double theta) { return std::log(4.0) / std::log(2.0 + 2.0 * std::cos(theta)); };
  double lo = 0.0, hi = kPi / 3.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dim(mid) < d ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DomainSpec make_snowflake(double d, int levels) {
  const double theta = snowflake_angle(d);
  if (levels < 0 || levels > 8) throw Error(ErrorCode::LevelTooDeep, "snowflake levels must be in [0, 8]");
  const double s = 1.0 / (2.0 + 2.0 * std::cos(theta));
  std::vector<Point> v;
  for (int k = 0; k < 3; ++k) v.push_back(std::polar(1.0, kPi / 2 + 2.0 * kPi * k / 3));
  const Point out_turn = std::polar(1.0, -theta), in_turn = std::polar(1.0, theta);
  for (int lev = 0; lev < levels; ++lev) {
    std::vector<Point> next;
    next.reserve(v.size() * 4);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point a = v[k], b = v[(k + 1) % v.size()];
      const Point step = s * (b - a);
      const Point p1 = a + step;
      const Point p2 = p1 + step * out_turn;  // bump to the right of travel, i.e. outward
      const Point p3 = p2 + step * in_turn;
      next.insert(next.end(), {a, p1, p2, p3});
    }
    v.swap(next);
  }
  std::ostringstream nm;
  nm << "snowflake-d" << d << "-L" << levels;
  return DomainSpec(nm.str(), {v});
}

DomainSpec make_cantor_complement(int level) {
  if (level < 0 || level > 7) throw Error(ErrorCode::LevelTooDeep, "Cantor level must be in [0, 7]");
  std::vector<std::vector<Point>> loops;
  loops.push_back({Point(-0.5, -0.5), Point(1.5, -0.5), Point(1.5, 1.5), Point(-0.5, 1.5)});
  std::function<void(Point, double, int)> rec = [&](Point corner, double side, int lev) {
    if (lev == level) {
      // clockwise hole
      loops.push_back({corner, corner + Point(0, side), corner + Point(side, side), corner + Point(side, 0)});
      return;
    }
    const double q = side / 4;
    for (int cy = 0; cy < 2; ++cy)
      for (int cx = 0; cx < 2; ++cx) rec(corner + Point(cx * 3 * q, cy * 3 * q), q, lev + 1);
  };
  rec(Point(0, 0), 1.0, 0);
  return DomainSpec("cantor-complement-L" + std::to_string(level), std::move(loops));
}

void write_domain(const DomainSpec& omega, std::ostream& os) {
  os << std::setprecision(17);
  os << "qclab-domain 1\n";
  os << "name " << omega.name << "\n";
  os << "loops " << omega.loops().size() << "\n";
  for (const auto& l : omega.loops()) {
    os << "loop " << l.size() << "\n";
    for (const auto& p : l) os << p.real() << " " << p.imag() << "\n";
  }
  os << "punctures " << omega.punctures().size() << "\n";
  for (const auto& p : omega.punctures()) os << p.real() << " " << p.imag() << "\n";
}

DomainSpec read_domain(std::istream& is) {
  std::string tag, magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "qclab-domain" || version != 1) throw Error(ErrorCode::IOError, "bad domain header");
  std::string name;
  std::size_t nloops = 0;
  if (!(is >> tag >> name) || tag != "name") throw Error(ErrorCode::IOError, "domain: expected name");
  if (!(is >> tag >> nloops) || tag != "loops") throw Error(ErrorCode::IOError, "domain: expected loops");
  std::vector<std::vector<Point>> loops(nloops);
  for (auto& l : loops) {
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "loop") throw Error(ErrorCode::IOError, "domain: expected loop");
    l.resize(n);
    for (auto& p : l) {
      double x, y;
      if (!(is >> x >> y)) throw Error(ErrorCode::IOError, "domain: truncated loop");
      p = Point(x, y);
    }
  }
  std::size_t np = 0;
  std::vector<Point> punct;
  if (is >> tag >> np && tag == "punctures") {
    punct.resize(np);
    for (auto& p : punct) {
      double x, y;
      if (!(is >> x >> y)) throw Error(ErrorCode::IOError, "domain: truncated punctures");
      p = Point(x, y);
    }
  }
  return DomainSpec(name, std::move(loops), std::move(punct));
}

void write_partition(const BoundaryPartition& p, std::ostream& os) {
  os << std::setprecision(17) << "qclab-partition 1\narcs " << p.arcs.size() << "\n";
  for (const auto& a : p.arcs) os << a.loop << " " << a.s0 << " " << a.s1 << " " << a.source << "\n";
}

BoundaryPartition read_partition(std::istream& is) {
  std::string magic, tag;
  int version = 0;
  std::size_t n = 0;
  if (!(is >> magic >> version >> tag >> n) || magic != "qclab-partition" || tag != "arcs") throw Error(ErrorCode::IOError, "bad partition header");
  BoundaryPartition p;
  p.arcs.resize(n);
  for (auto& a : p.arcs)
    if (!(is >> a.loop >> a.s0 >> a.s1 >> a.source)) throw Error(ErrorCode::IOError, "truncated partition");
  return p;
}

}  // namespace qclab
