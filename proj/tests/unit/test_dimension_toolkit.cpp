#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qclab/dimension.hpp"
#include "qclab/domain.hpp"
#include "qclab/gauges.hpp"
#include "qclab/matrix_field.hpp"

using namespace qclab;

namespace {

constexpr double kE = std::numbers::e;

// Box-partition cover: each occupied box of side delta*sqrt2 is enclosed in the
// ball about its points' bbox centre, so every radius is <= delta. Minimum over
// 16 grid offsets.
double box_cover_content(const std::vector<Point>& pts, double s, double delta) {
  const double side = delta * std::sqrt(2.0);
  double best = std::numeric_limits<double>::infinity();
  for (int oi = 0; oi < 4; ++oi)
    for (int oj = 0; oj < 4; ++oj) {
      std::map<std::pair<long, long>, std::vector<Point>> boxes;
      for (const Point& p : pts)
        boxes[{static_cast<long>(std::floor((p.real() - oi * side / 4) / side)),
               static_cast<long>(std::floor((p.imag() - oj * side / 4) / side))}]
            .push_back(p);
      double sum = 0;
      for (const auto& [key, v] : boxes) {
        double x0 = v[0].real(), x1 = x0, y0 = v[0].imag(), y1 = y0;
        for (const Point& p : v) {
          x0 = std::min(x0, p.real());
          x1 = std::max(x1, p.real());
          y0 = std::min(y0, p.imag());
          y1 = std::max(y1, p.imag());
        }
        const Point c(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        double r = 0;
        for (const Point& p : v) r = std::max(r, std::abs(p - c));
        sum += std::pow(r, s);
      }
      best = std::min(best, sum);
    }
  return best;
}

}  // namespace

TEST_SUITE("dimension_toolkit") {

TEST_CASE("t_prime values and identities") {
  for (double K : {1.0, 1.5, 2.0, 7.0}) CHECK(std::abs(t_prime(2.0, K) - 2.0) <= 1e-12);
  for (double t : {0.3, 1.0, 1.7}) CHECK(std::abs(t_prime(t, 1.0) - t) <= 1e-12);
  for (double l : {1.0, 2.0, 3.5}) CHECK(std::abs(t_prime(1.0, l) - 2 * l / (l + 1)) <= 1e-12);
  // inverse under K <-> 1/K
  for (double t = 0.1; t <= 2.0; t += 0.1)
    for (double K = 1.0; K <= 5.0; K += 0.25)
      CHECK(std::abs(t_prime_unchecked(t_prime(t, K), 1.0 / K) - t) <= 1e-12);
  // strictly increasing in both arguments on the open domain
  for (double t = 0.1; t < 1.9; t += 0.1) {
    CHECK(t_prime(t + 0.05, 2.0) > t_prime(t, 2.0));
    CHECK(t_prime(t, 2.5) > t_prime(t, 2.0));
  }
  CHECK_THROWS_AS(t_prime(0.0, 2.0), Error);
  CHECK_THROWS_AS(t_prime(2.5, 2.0), Error);
  CHECK_THROWS_AS(t_prime(1.0, 0.5), Error);
}

TEST_CASE("dimension distortion interval") {
  for (double d : {0.5, 1.0, 1.5}) {
    const Interval iv = dim_distortion_interval(d, 1.0);
    CHECK(std::abs(iv.lo - d) <= 1e-12);
    CHECK(std::abs(iv.hi - d) <= 1e-12);
  }
  const Interval two = dim_distortion_interval(2.0, 3.0);
  CHECK(std::abs(two.lo - 2.0) <= 1e-12);
  CHECK(std::abs(two.hi - 2.0) <= 1e-12);
  for (double K : {1.5, 2.0, 4.0}) {
    const Interval iv = dim_distortion_interval(1.0, K);
    CHECK(std::abs(iv.lo - 2 / (K + 1)) <= 1e-12);
    CHECK(std::abs(iv.hi - 2 * K / (K + 1)) <= 1e-12);
    CHECK(std::abs(iv.hi - t_prime(1.0, K)) <= 1e-12);
  }
  CHECK_THROWS_AS(dim_distortion_interval(0.0, 2.0), Error);
}

TEST_CASE("Makarov gauge") {
  const double r0 = std::ldexp(1.0, -12);
  for (double rho : {1.0, 2.0}) {
    // decreasing on the printed decades once the gap beats the correction term
    const double alpha = 2 / (rho + 1) - 0.5;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 6; k <= 12; ++k) {
      const double r = std::pow(10.0, -k);
      const double q = makarov_gauge(rho, 1.0, r0, r) / std::pow(r, alpha);
      CHECK(q < prev);
      prev = q;
    }
    // for a small gap the ratio still tends to 0, far below the double range
    const double a2 = 2 / (rho + 1) - 0.05;
    CHECK(log_makarov_gauge(rho, 1.0, r0, 1e6) + a2 * 1e6 < -1000);
    CHECK(log_makarov_gauge(rho, 1.0, r0, 1e8) + a2 * 1e8 < log_makarov_gauge(rho, 1.0, r0, 1e6) + a2 * 1e6);
  }
  for (double r : {1e-3, 1e-6, 1e-9}) CHECK(makarov_gauge(1.0, 0.0, r0, r) == doctest::Approx(r).epsilon(1e-12));
  // doubling, including far below the double range through the log form
  for (double rho : {0.5, 1.0, 2.0})
    for (double u = std::log(4.0); u < 1e12; u *= 1.3)
      CHECK(std::exp(log_makarov_ratio(rho, 1.0, r0, u, 4.0)) <= 1.1 * std::pow(4.0, 2 / (rho + 1)));
  // nondecreasing on (0, r0]
  double prev = -std::numeric_limits<double>::infinity();
  for (double u = 40.0; u >= -std::log(r0); u -= 0.01) {
    const double v = log_makarov_gauge(1.0, 1.0, r0, u);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK_THROWS_AS(makarov_gauge(1.0, 1.0, 0.1, 1e-3), Error);
}

TEST_CASE("gauge admissibility matches the golden r0") {
  std::ifstream in(std::string(QCLAB_GOLDEN_DIR) + "/gauge_admissibility.txt");
  REQUIRE(in);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    double C, K, r0;
    int k;
    is >> C >> K >> k >> r0;
    const Admissibility a = gauge_admissibility(C, K);
    CHECK(a.k == k);
    CHECK(a.r0 == r0);
    CHECK(a.margin_monotone <= 0);
    CHECK(a.margin_doubling <= 0);
  }
  // larger C needs a smaller r0
  CHECK(gauge_admissibility(2.0, 2.0).k >= gauge_admissibility(1.0, 2.0).k);
}

TEST_CASE("Q_T and its limit driver") {
  for (double u : {20.0, 100.0, 1e4}) CHECK(q_t_u(1.0, u) == doctest::Approx(1.0).epsilon(1e-15));
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 6; k <= 300; ++k) {
    const double u = k * std::log(10.0);
    const double q = q_t_u(2.0, u);
    CHECK(q - 1 < prev);
    prev = q - 1;
    CHECK(std::abs(q - q_t_product_u(2.0, u)) <= 1e-12);
  }
  prev = std::numeric_limits<double>::infinity();
  for (double u = 6 * std::log(10.0); u < 1e15; u *= 2) {
    const double d = q_t_limit_driver(2.0, u);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-4);
  CHECK(q_t(2.0, 1e-8) == doctest::Approx(q_t_product(2.0, 1e-8)).epsilon(1e-12));
  CHECK_THROWS_AS(q_t(2.0, 0.01), Error);
}

TEST_CASE("auxiliary gauges") {
  const AuxGauges e = aux_gauges(1 / kE, 1.0, std::ldexp(1.0, -12));
  CHECK(e.g == doctest::Approx(1 / kE).epsilon(1e-14));
  CHECK(e.h == doctest::Approx(1 / kE).epsilon(1e-14));
  const AuxGauges s = aux_gauges(1e-3, 1.0, std::ldexp(1.0, -12));
  CHECK(s.g < 1e-3);
  CHECK(1e-3 < s.h);
  CHECK_THROWS_AS(aux_gauges(0.5, 1.0, 1e-4), Error);

  // H^g(f(A)) <= 2 C H^1(A) for a log-Lipschitz f on segments
  const auto f = [](Point z) {
    const double t = z.real();
    return Point(t * std::log(1 / t), 0.2 * std::sin(4 * t) * t);
  };
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-4, 0.3);
  double C = 0;
  for (int n = 0; n < 20000; ++n) {
    const double a = u(rng), b = u(rng);
    const double d = std::abs(a - b);
    if (d < 1e-9 || d > 1 / kE) continue;
    C = std::max(C, std::abs(f(a) - f(b)) / (d * std::log(1 / d)));
  }
  const GaugeFunction g = GaugeFunction::t_over_log();
  std::vector<Point> img;
  for (int n = 0; n <= 20000; ++n) img.push_back(f(Point(1e-4 + (0.3 - 1e-4) * n / 20000.0, 0)));
  for (double delta : {0.05, 0.01, 0.002}) CHECK(spherical_content(img, g, delta) <= 2 * C * (0.3 - 1e-4));
}

TEST_CASE("gauge functions are monotone on their declared intervals") {
  const double r0 = std::ldexp(1.0, -12);
  const std::vector<GaugeFunction> gs{
      GaugeFunction::power(0.7), GaugeFunction::makarov(1.0, 1.0, r0), GaugeFunction::makarov(2.0, 0.5, r0),
      GaugeFunction::t_log(), GaugeFunction::t_over_log(),
      GaugeFunction::composed(GaugeFunction::makarov(1.0, 1.0, r0), GaugeFunction::t_log())};
  for (const GaugeFunction& g : gs) {
    const double top = std::min(g.monotone_limit(), 1.0);
    double prev = 0;
    for (double lr = std::log(top) - 200; lr <= std::log(top); lr += 0.01) {
      const double v = g(std::exp(lr));
      CHECK_MESSAGE(v >= prev * (1 - 1e-12), g.describe());
      prev = v;
    }
    CHECK(g(1e-300) < 1e-100);
  }
  CHECK_THROWS_AS(GaugeFunction::makarov(1.0, 1.0, 0.2), Error);
}

TEST_CASE("spherical content") {
  const GaugeFunction power = GaugeFunction::power(0.5);
  CHECK(spherical_content({Point(0.3, 0.1)}, power, 1e-6) == 0.0);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Point> seg;
  for (int n = 0; n < 10000; ++n) seg.push_back(Point(0.1, 0.2) + u(rng) * Point(2.0, 1.0));
  const double L = std::abs(Point(2.0, 1.0));
  const double c = spherical_content(seg, [](double r) { return 2 * r; }, 0.05 * L);
  CHECK(std::abs(c - L) <= 0.1 * L);

  std::vector<Point> circ;
  for (int n = 0; n < 20000; ++n) circ.push_back(std::polar(1.0, 2 * kPi * u(rng)));
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.1, 0.03, 0.01, 0.003, 0.001}) {
    const double v = spherical_content(circ, [](double r) { return std::pow(r, 1.5); }, delta);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 0.1);
}

TEST_CASE("spherical content against the box-cover oracle on the fractal corpus") {
  for (double d : {1.2, std::log(4.0) / std::log(3.0) - 1e-9}) {
    const DomainSpec sf = make_snowflake(d, 6);
    const double seg = std::abs(sf.loops()[0][1] - sf.loops()[0][0]);
    const auto pts = sf.boundary_samples(seg / 8);
    for (double k : {4.0, 8.0, 16.0, 32.0}) {
      const double delta = k * seg;
      const double greedy = spherical_content(pts, [d](double r) { return std::pow(r, d); }, delta);
      const double oracle = box_cover_content(pts, d, delta);
      CHECK(std::abs(greedy - oracle) <= 0.1 * oracle);
    }
  }
  // the greedy cover finds the four-corner squares; fixed grids only do when aligned
  const DomainSpec c = make_cantor_complement(5);
  std::vector<Point> pts;
  for (std::size_t l = 1; l < c.loops().size(); ++l)
    for (const Point& p : c.loops()[l]) pts.push_back(p);
  for (double delta : {1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32}) {
    const double greedy = spherical_content(pts, [](double r) { return r; }, delta);
    CHECK(greedy <= 1.1 * box_cover_content(pts, 1.0, delta));
  }
}

TEST_CASE("measure dimension of reference measures") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);

  WeightedPoints atom;
  atom.points.assign(500, Point(0.2, 0.3));
  const DimensionEstimate e0 = measure_dimension(atom, dyadic_scales(1.0 / 64, 0.5));
  CHECK(std::abs(e0.value) <= 0.05);

  WeightedPoints circ;
  for (int n = 0; n < 20000; ++n) circ.points.push_back(std::polar(1.0, 2 * kPi * u(rng)));
  const DimensionEstimate e1 = measure_dimension(circ);
  CHECK(std::abs(e1.value - 1.0) <= 0.05);
  CHECK(e1.ci_lo <= e1.value);
  CHECK(e1.value <= e1.ci_hi);
  CHECK(e1.scales.size() >= 4);
  CHECK(std::abs(box_counting_dimension(circ.points, e1.scales).value - 1.0) <= 0.05);

  WeightedPoints sq;
  for (int n = 0; n < 100000; ++n) sq.points.emplace_back(u(rng), u(rng));
  const DimensionEstimate e2 = measure_dimension(sq);
  CHECK(std::abs(e2.value - 2.0) <= 0.1);
  CHECK(std::abs(box_counting_dimension(sq.points, e2.scales).value - 2.0) <= 0.1);

  // weights matter: all mass on one point of the circle sample
  WeightedPoints skew = circ;
  skew.weights.assign(circ.points.size(), 0.0);
  skew.weights[0] = 1.0;
  CHECK(std::abs(measure_dimension(skew).value) <= 0.05);

  try {
    measure_dimension(circ, {0.5, 0.25, 0.125});
    FAIL("expected InsufficientScales");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientScales);
  }
}

TEST_CASE("dimension record text") {
  DimensionEstimate e;
  e.value = 1.25;
  e.ci_lo = 1.2;
  e.ci_hi = 1.3;
  e.scales = {0.5, 0.25};
  std::ostringstream os;
  write_dimension_record(os, "demo", e);
  CHECK(os.str() == "name=demo value=1.25 ci_lo=1.2 ci_hi=1.3 scales=0.5;0.25\n");
  std::ostringstream gs;
  write_gauge_csv(gs, GaugeFunction::power(1.0), {0.5});
  CHECK(gs.str() == "r,value\n0.5,0.5\n");
}

TEST_CASE("perturbation bound") {
  const PerturbationBound z = perturbation_bound(0.0, 3.0);
  CHECK(z.lambda_prime == 1.0);
  CHECK(z.dim_upper_symmetric == 1.0);
  CHECK(z.dim_upper_general == 1.0);
  for (double eps : {0.01, 0.05, 0.1}) {
    const PerturbationBound b = perturbation_bound(eps, 2.0);
    CHECK(std::abs(b.lambda_prime - 1 / (1 - 2 * eps * 2.0)) <= 1e-12);
    CHECK(std::abs(b.k_symmetric - k_lambda(b.lambda_prime, true)) <= 1e-12);
    CHECK(std::abs(b.k_general - k_lambda(b.lambda_prime, false)) <= 1e-12);
    CHECK(std::abs(b.dim_upper_symmetric - t_prime(1.0, b.k_symmetric)) <= 1e-12);
  }
  double prev = 1.0;
  for (double eps = 1e-6; eps < 0.24; eps += 0.001) {
    const double d = perturbation_bound(eps, 2.0).dim_upper_general;
    CHECK(d >= prev);
    CHECK(d - prev < 0.05);  // continuity on the sweep
    prev = d;
  }
  CHECK(perturbation_bound(1e-9, 2.0).dim_upper_general - 1.0 < 1e-3);
  CHECK_THROWS_AS(perturbation_bound(0.25, 2.0), Error);
  CHECK_NOTHROW(perturbation_bound(0.1, 2.0, 2));
  CHECK_THROWS_AS(perturbation_bound(0.2, 2.0, 2), Error);
}

}  // TEST_SUITE
