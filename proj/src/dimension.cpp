#include "qclab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "qclab/domain.hpp"
#include "qclab/measure_engine.hpp"

namespace qclab {

namespace {

struct Fit {
  double slope = 0.0, se = 0.0;
};

Fit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  Fit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  if (x.size() > 2 && sxx > 0) {
    double rss = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double e = y[k] - my - f.slope * (x[k] - mx);
      rss += e * e;
    }
    f.se = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

std::uint64_t cell_key(std::int64_t i, std::int64_t j) {
  return (static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint64_t>(j & 0xffffffff);
}

// Uniform bucket grid for fixed-radius neighbour queries.
class Buckets {
 public:
  Buckets(const std::vector<Point>& pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t k = 0; k < pts.size(); ++k) map_[key(pts[k])].push_back(static_cast<std::uint32_t>(k));
  }

  template <class F>
  void visit(Point c, F&& f) const {
    const auto ci = static_cast<std::int64_t>(std::floor(c.real() / cell_));
    const auto cj = static_cast<std::int64_t>(std::floor(c.imag() / cell_));
    for (std::int64_t dj = -1; dj <= 1; ++dj)
      for (std::int64_t di = -1; di <= 1; ++di) {
        const auto it = map_.find(cell_key(ci + di, cj + dj));
        if (it == map_.end()) continue;
        for (std::uint32_t k : it->second) f(k);
      }
  }

 private:
  const std::vector<Point>& pts_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> map_;

  std::uint64_t key(Point p) const {
    return cell_key(static_cast<std::int64_t>(std::floor(p.real() / cell_)),
                    static_cast<std::int64_t>(std::floor(p.imag() / cell_)));
  }
};

double diameter_bound(const std::vector<Point>& pts) {
  if (pts.empty()) return 0.0;
  double x0 = pts[0].real(), x1 = x0, y0 = pts[0].imag(), y1 = y0;
  for (const Point& p : pts) {
    x0 = std::min(x0, p.real());
    x1 = std::max(x1, p.real());
    y0 = std::min(y0, p.imag());
    y1 = std::max(y1, p.imag());
  }
  return std::hypot(x1 - x0, y1 - y0);
}

double median_spacing(const std::vector<Point>& pts, std::mt19937_64& rng) {
  if (pts.size() < 2) return 0.0;
  const double diam = diameter_bound(pts);
  if (diam == 0) return 0.0;
  // bucket at a size that keeps a few points per cell for uniform clouds
  const double cell = std::max(diam / std::sqrt(static_cast<double>(pts.size())), diam * 1e-9);
  const Buckets b(pts, cell);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::vector<double> nn;
  const int samples = static_cast<int>(std::min<std::size_t>(pts.size(), 2000));
  for (int s = 0; s < samples; ++s) {
    const std::size_t k = pts.size() <= 2000 ? static_cast<std::size_t>(s) : pick(rng);
    double best = std::numeric_limits<double>::infinity();
    b.visit(pts[k], [&](std::uint32_t j) {
      if (j != k) best = std::min(best, std::abs(pts[j] - pts[k]));
    });
    if (std::isfinite(best)) nn.push_back(best);
  }
  if (nn.empty()) return cell;
  std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
  return nn[nn.size() / 2];
}

}  // namespace

std::vector<double> dyadic_scales(double lo, double hi) {
  std::vector<double> s;
  if (!(hi > 0) || !(lo > 0)) return s;
  for (double r = hi; r >= lo * (1 - 1e-12); r *= 0.5) s.push_back(r);
  return s;
}

DimensionEstimate measure_dimension(const WeightedPoints& mu, std::vector<double> scales, const DimensionOptions& opts) {
  const auto& pts = mu.points;
  if (pts.empty()) throw Error(ErrorCode::InsufficientScales, "empty measure");
  std::vector<double> w = mu.weights.empty() ? std::vector<double>(pts.size(), 1.0) : mu.weights;
  if (w.size() != pts.size()) throw Error(ErrorCode::DomainError, "weights must match points");
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0)) throw Error(ErrorCode::DomainError, "measure has no mass");

  std::mt19937_64 rng(opts.seed);
  if (scales.empty()) {
    const double h = opts.h_eff > 0 ? opts.h_eff : median_spacing(pts, rng);
    scales = dyadic_scales(5.0 * h, diameter_bound(pts) / 10.0);
  }
  std::sort(scales.begin(), scales.end(), std::greater<>());
  if (scales.size() < 4 || !(scales.back() > 0))
    throw Error(ErrorCode::InsufficientScales, "need at least 4 scales in the resolution band, have " +
                                                   std::to_string(scales.size()));

  const Buckets buckets(pts, scales.front());
  std::discrete_distribution<std::size_t> sample(w.begin(), w.end());
  std::vector<double> lx;
  for (double r : scales) lx.push_back(std::log(r));

  std::vector<double> slopes;
  std::vector<double> mass(scales.size());
  for (int c = 0; c < opts.n_centers; ++c) {
    const Point x = pts[sample(rng)];
    std::fill(mass.begin(), mass.end(), 0.0);
    buckets.visit(x, [&](std::uint32_t j) {
      const double d = std::abs(pts[j] - x);
      for (std::size_t s = 0; s < scales.size() && d <= scales[s]; ++s) mass[s] += w[j];
    });
    std::vector<double> ly;
    for (double m : mass) ly.push_back(std::log(m / total));
    slopes.push_back(linear_fit(lx, ly).slope);
  }

  DimensionEstimate e;
  e.scales = scales;
  e.centers = slopes.size();
  e.value = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
  std::vector<double> boot;
  std::uniform_int_distribution<std::size_t> pick(0, slopes.size() - 1);
  for (int b = 0; b < opts.bootstrap; ++b) {
    double s = 0;
    for (std::size_t k = 0; k < slopes.size(); ++k) s += slopes[pick(rng)];
    boot.push_back(s / static_cast<double>(slopes.size()));
  }
  std::sort(boot.begin(), boot.end());
  if (boot.empty()) {
    e.ci_lo = e.ci_hi = e.value;
  } else {
    e.ci_lo = std::min(e.value, boot[static_cast<std::size_t>(0.025 * (boot.size() - 1))]);
    e.ci_hi = std::max(e.value, boot[static_cast<std::size_t>(0.975 * (boot.size() - 1))]);
  }
  return e;
}

DimensionEstimate measure_dimension(const BoundaryMeasure& mu, const DomainSpec& omega, std::vector<double> scales,
                                    const DimensionOptions& opts) {
  WeightedPoints wp;
  double longest = 0.0;
  for (std::size_t j = 0; j < mu.partition.size(); ++j) {
    const Arc& a = mu.partition.arcs[j];
    wp.points.push_back(omega.point_at(a.loop, 0.5 * (a.s0 + a.s1)));
    wp.weights.push_back(mu.weights[j]);
    longest = std::max(longest, a.s1 - a.s0);
  }
  DimensionOptions o = opts;
  if (o.h_eff <= 0) o.h_eff = longest;
  return measure_dimension(wp, std::move(scales), o);
}

std::size_t box_count(const std::vector<Point>& points, double side) {
  std::unordered_set<std::uint64_t> boxes;
  for (const Point& p : points)
    boxes.insert(cell_key(static_cast<std::int64_t>(std::floor(p.real() / side)),
                          static_cast<std::int64_t>(std::floor(p.imag() / side))));
  return boxes.size();
}

DimensionEstimate box_counting_dimension(const std::vector<Point>& points, const std::vector<double>& scales) {
  if (scales.size() < 4) throw Error(ErrorCode::InsufficientScales, "need at least 4 box sizes");
  std::vector<double> lx, ly;
  for (double s : scales) {
    lx.push_back(std::log(1.0 / s));
    ly.push_back(std::log(static_cast<double>(box_count(points, s))));
  }
  const Fit f = linear_fit(lx, ly);
  DimensionEstimate e;
  e.value = f.slope;
  e.ci_lo = f.slope - 2.0 * f.se;
  e.ci_hi = f.slope + 2.0 * f.se;
  e.scales = scales;
  e.centers = points.size();
  return e;
}

double spherical_content(const std::vector<Point>& points, const std::function<double(double)>& gauge, double delta) {
  if (points.empty()) return 0.0;
  if (!(delta > 0)) throw Error(ErrorCode::DomainError, "delta must be positive");
  std::vector<std::vector<std::uint32_t>> stack(1);
  stack[0].resize(points.size());
  std::iota(stack[0].begin(), stack[0].end(), 0u);
  double sum = 0.0;
  while (!stack.empty()) {
    std::vector<std::uint32_t> idx = std::move(stack.back());
    stack.pop_back();
    double x0 = points[idx[0]].real(), x1 = x0, y0 = points[idx[0]].imag(), y1 = y0;
    for (std::uint32_t k : idx) {
      x0 = std::min(x0, points[k].real());
      x1 = std::max(x1, points[k].real());
      y0 = std::min(y0, points[k].imag());
      y1 = std::max(y1, points[k].imag());
    }
    const Point c(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    double radius = 0.0;
    for (std::uint32_t k : idx) radius = std::max(radius, std::abs(points[k] - c));
    if (radius <= delta) {
      sum += gauge(radius);
      continue;
    }
    const bool along_x = (x1 - x0) >= (y1 - y0);
    auto coord = [&](std::uint32_t k) { return along_x ? points[k].real() : points[k].imag(); };
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return coord(a) < coord(b); });
    // largest gap among the middle half of the order, so uniformly spaced
    // samples are bisected instead of peeled
    const std::size_t n = idx.size();
    std::size_t cut = n / 2;
    double gap = -1.0;
    for (std::size_t k = std::max<std::size_t>(1, n / 4); k <= n - n / 4 && k < n; ++k) {
      const double g = coord(idx[k]) - coord(idx[k - 1]);
      if (g > gap) {
        gap = g;
        cut = k;
      }
    }
    stack.emplace_back(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
    stack.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  }
  return sum;
}

void write_gauge_csv(std::ostream& os, const GaugeFunction& g, const std::vector<double>& radii) {
  os << "r,value\n";
  os.precision(17);
  for (double r : radii) os << r << ',' << g(r) << '\n';
}

void write_dimension_record(std::ostream& os, const std::string& name, const DimensionEstimate& e) {
  os.precision(10);
  os << "name=" << name << " value=" << e.value << " ci_lo=" << e.ci_lo << " ci_hi=" << e.ci_hi << " scales=";
  for (std::size_t k = 0; k < e.scales.size(); ++k) os << (k ? ";" : "") << e.scales[k];
  os << '\n';
}

}  // namespace qclab
