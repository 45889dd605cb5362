#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qclab/capacity.hpp"
#include "qclab/measure_engine.hpp"
#include "qclab/qc_map.hpp"
#include "qclab/walk_on_spheres.hpp"

using namespace qclab;

namespace {

MatrixField identity_on(const DomainSpec& d, double h) {
  return MatrixField::constant(Grid2D::covering(d.lo(), d.hi(), h, 2), Mat2::Identity());
}

// Harmonic measure of the arc (t0, t1) of the unit circle from pole p, by Simpson's rule.
double poisson_arc(Point p, double t0, double t1) {
  const int n = 20000;
  double s = 0;
  for (int k = 0; k <= n; ++k) {
    const double t = t0 + (t1 - t0) * k / n;
    const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    s += w * (1 - std::norm(p)) / (2 * kPi * std::norm(std::polar(1.0, t) - p));
  }
  return s * (t1 - t0) / n / 3;
}

std::vector<std::vector<double>> golden_rows(const std::string& file, const std::string& key) {
  std::ifstream in(std::string(QCLAB_GOLDEN_DIR) + "/" + file);
  REQUIRE(in);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string name;
    is >> name;
    if (name != key) continue;
    std::vector<double> v;
    double x;
    while (is >> x) v.push_back(x);
    rows.push_back(v);
  }
  REQUIRE(!rows.empty());
  return rows;
}

}  // namespace

TEST_SUITE("measure_engine") {

TEST_CASE("Dirichlet problem: constants, linear data, symmetry") {
  const DomainSpec disk = make_disk(0.0, 1.0, 512);
  const double h = 1.0 / 32;
  const MatrixField id = identity_on(disk, h);

  const DirichletSolution one = solve_dirichlet(id, disk, [](const BoundaryLocation&) { return 1.0; }, h);
  // relative residual 1e-10 times a condition number of order h^-2
  for (std::size_t k = 0; k < one.u.values.size(); ++k)
    if (one.inside[k]) CHECK(std::abs(one.u.values[k] - 1.0) < 1e-7);
  CHECK(one.stats.residual <= 1e-10);

  const DirichletSolution lin = solve_dirichlet(id, disk, [](const BoundaryLocation& b) { return b.point.real(); }, h);
  double err = 0;
  for (std::size_t k = 0; k < lin.u.values.size(); ++k)
    if (lin.inside[k]) err = std::max(err, std::abs(lin.u.values[k] - lin.u.grid.node(k).real()));
  CHECK(err <= 4 * h * h);

  const double w = 2 * h;
  const auto upper = [w](const BoundaryLocation& b) { return 0.5 * (1 + std::tanh(b.point.imag() / w)); };
  const DirichletSolution half = solve_dirichlet(id, disk, upper, h);
  CHECK(std::abs(bilinear(half.u, 0.0) - 0.5) <= 2e-3);
}

TEST_CASE("discrete maximum principle across the corpus") {
  const double h = 1.0 / 32;
  const std::vector<DomainSpec> domains{make_disk(0.0, 1.0, 256), make_square(0.0, 2.0, 8), make_snowflake(1.2, 3),
                                        make_cantor_complement(2)};
  const std::vector<Mat2> mats{Mat2::Identity(), (Mat2() << 2.0, 0.0, 0.0, 0.5).finished(),
                               (Mat2() << 1.5, 0.4, -0.2, 1.0).finished()};
  for (const DomainSpec& d : domains)
    for (const Mat2& m : mats) {
      const MatrixField a = MatrixField::constant(Grid2D::covering(d.lo(), d.hi(), h, 2), m);
      const DirichletSolution s = solve_dirichlet(
          a, d, [](const BoundaryLocation& b) { return std::sin(3 * b.point.real()) + b.point.imag(); }, h);
      for (std::size_t k = 0; k < s.u.values.size(); ++k)
        if (s.inside[k]) {
          CHECK(s.u.values[k] >= s.data_min - 1e-9);
          CHECK(s.u.values[k] <= s.data_max + 1e-9);
        }
    }
}

TEST_CASE("elliptic measure of the disk against the Poisson kernel") {
  const DomainSpec disk = make_disk(0.0, 1.0, 1024);
  const double h = 1.0 / 128;
  const MatrixField id = identity_on(disk, h);
  const BoundaryMeasure m = elliptic_measure(id, disk, 0.0, boundary_partition(disk, 16), h);
  for (double w : m.weights) CHECK(std::abs(w - 1.0 / 16) <= 1e-3);
  CHECK(std::accumulate(m.weights.begin(), m.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(m.raw_sum - 1.0) <= 1e-3);

  const double L = disk.perimeter();
  BoundaryPartition p;
  p.arcs = {{0, 0.0, L / 24}, {0, L / 24, L - L / 24}, {0, L - L / 24, L}};
  const BoundaryMeasure m5 = elliptic_measure(id, disk, Point(0.5, 0.0), p, h);
  const double expected = poisson_arc(Point(0.5, 0.0), -kPi / 12, kPi / 12);
  CHECK(std::abs(m5.weights[0] + m5.weights[2] - expected) <= 2e-3);

  // any A: weights are a probability vector
  const MatrixField a = MatrixField::constant(id.grid, (Mat2() << 1.5, 0.4, -0.2, 1.0).finished());
  const BoundaryMeasure ma = elliptic_measure(a, disk, Point(0.2, -0.3), boundary_partition(disk, 32), h);
  CHECK(ma.total() == doctest::Approx(1.0).epsilon(1e-12));
  for (double w : ma.weights) CHECK(w >= 0);
}

TEST_CASE("walk on spheres: disk, square and cross-method agreement") {
  const DomainSpec disk = make_disk(0.0, 1.0, 1024);
  const BoundaryPartition p = boundary_partition(disk, 16);
  const BoundaryMeasure w = harmonic_measure_wos(disk, 0.0, p, 200000, 7);
  CHECK(w.total() == doctest::Approx(1.0).epsilon(3.0 / std::sqrt(200000.0)));
  for (std::size_t j = 0; j < p.size(); ++j) CHECK(std::abs(w.weights[j] - 1.0 / 16) <= 3 * w.std_error[j]);
  CHECK(static_cast<double>(w.abandoned) / 200000 < 1e-3);

  const DomainSpec sq = make_square(0.0, 2.0, 16);
  const BoundaryMeasure ws = harmonic_measure_wos(sq, 0.0, boundary_partition(sq, 4), 200000, 8);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(ws.weights[j] - 0.25) <= 3 * ws.std_error[j]);

  const double h = 1.0 / 128;
  const BoundaryMeasure pde = elliptic_measure(identity_on(disk, h), disk, Point(0.5, 0.0), p, h);
  const BoundaryMeasure mc = harmonic_measure_wos(disk, Point(0.5, 0.0), p, 200000, 9);
  for (std::size_t j = 0; j < p.size(); ++j) CHECK(std::abs(pde.weights[j] - mc.weights[j]) <= 3 * mc.std_error[j] + 2e-3);
}

TEST_CASE("walk on spheres is reproducible and thread independent") {
  const DomainSpec sq = make_square(0.0, 2.0, 4);
  const BoundaryPartition p = boundary_partition(sq, 8);
  WosOptions one;
  one.threads = 1;
  WosOptions many;
  many.threads = 4;
  const BoundaryMeasure a = harmonic_measure_wos(sq, Point(0.1, 0.2), p, 20000, 42, one);
  const BoundaryMeasure b = harmonic_measure_wos(sq, Point(0.1, 0.2), p, 20000, 42, many);
  const BoundaryMeasure c = harmonic_measure_wos(sq, Point(0.1, 0.2), p, 20000, 43, many);
  CHECK(a.weights == b.weights);
  CHECK(a.weights != c.weights);
}

TEST_CASE("pushforward comparison under the identity") {
  const DomainSpec disk = make_disk(0.0, 1.0, 1024);
  const BoundaryPartition p = boundary_partition(disk, 32);
  const QCMap id = QCMap::identity(Grid2D::box(4, 64));
  const MappedDomain img = map_domain(disk, id, p);
  const double h = 1.0 / 128;
  const BoundaryMeasure pde = elliptic_measure(identity_on(disk, h), disk, Point(0.3, 0.1), p, h);
  const BoundaryMeasure mc = harmonic_measure_wos(img.domain, Point(0.3, 0.1), img.partition, 200000, 3);
  const PushforwardReport r = pushforward_compare(pde, id, mc, 0.02);
  CHECK(r.pass);
  CHECK(r.tv <= 3 * r.mc_floor + 2e-3);

  BoundaryMeasure shifted = mc;
  shifted.pole = Point(0.0, 0.0);
  CHECK_THROWS_AS(pushforward_compare(pde, id, shifted), Error);
  BoundaryMeasure fewer = mc;
  fewer.weights.pop_back();
  CHECK_THROWS_AS(pushforward_compare(pde, id, fewer), Error);
}

TEST_CASE("Green function: radial closed form, positivity, duality") {
  const DomainSpec disk = make_disk(0.0, 1.0, 1024);
  for (double h : {1.0 / 32, 1.0 / 64}) {
    const MatrixField id = identity_on(disk, h);
    const GreenField g = green_function(id, disk, 0.0, h);
    double err = 0, gmin = 0;
    for (std::size_t k = 0; k < g.g.values.size(); ++k) {
      gmin = std::min(gmin, g.g.values[k]);
      const Point z = g.g.grid.node(k);
      if (std::abs(z) < 8 * h || !disk.contains(z)) continue;
      err = std::max(err, std::abs(g.g.values[k] - std::log(1 / std::abs(z)) / (2 * kPi)));
    }
    CHECK(err <= h);
    CHECK(gmin >= -1e-10);
  }

  const double h = 1.0 / 64;
  const Grid2D grid = Grid2D::covering(disk.lo(), disk.hi(), h, 2);
  MatrixField a = MatrixField::from_function(grid, [](Point z) {
    const double s = 0.5 * std::sin(3 * z.real());
    return (Mat2() << 1.5 + 0.3 * std::cos(2 * z.imag()), s, -s + 0.2, 1.0).finished();
  });
  a.detect_flags();
  const EllipticProblem pa(a, disk, h), pt(a.transposed(), disk, h);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  double worst = 0;
  for (int n = 0; n < 20; ++n) {
    const Point p(u(rng), u(rng)), x(u(rng), u(rng));
    if (std::abs(p - x) < 0.2) {
      --n;
      continue;
    }
    worst = std::max(worst, std::abs(green_function(pa, p).value(x) - green_function(pt, x).value(p)));
  }
  CHECK(worst <= h);
}

TEST_CASE("capacity of balls, points and nested sets") {
  const double exact = 2 * kPi / std::log(2.0);
  CHECK(std::abs(ball_capacity(1.0, 2.0, 1.0 / 64) - exact) <= 0.05 * exact);
  const double c4 = ball_capacity(0.25, 0.5, 1.0 / 128), c2 = ball_capacity(0.5, 1.0, 1.0 / 128);
  CHECK(std::abs(c4 - c2) <= 0.02 * c2);

  // single node of K, refining: the capacity decays toward zero
  double prev = 1e300;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const Grid2D g = Grid2D::covering(Point(-1, -1), Point(1, 1), h, 0);
    std::vector<std::uint8_t> k(g.size(), 0), om(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) {
      k[n] = std::abs(g.node(n)) < 1e-12;
      om[n] = std::abs(g.node(n)) < 1.0;
    }
    const double c = capacity(k, om, g).value;
    CHECK(c < prev);
    prev = c;
  }
  CHECK(prev < 1.5);

  const Grid2D g = Grid2D::covering(Point(-1, -1), Point(1, 1), 1.0 / 32, 0);
  std::vector<std::uint8_t> k1(g.size()), k2(g.size()), om(g.size()), none(g.size(), 0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Point z = g.node(n);
    k1[n] = std::abs(z - Point(0.1, 0)) < 0.2;
    k2[n] = std::abs(z) < 0.4;
    om[n] = std::abs(z) < 0.95;
  }
  CHECK(capacity(k1, om, g).value <= capacity(k2, om, g).value);
  CHECK_THROWS_AS(capacity(none, om, g), Error);
}

TEST_CASE("CDC audit: disk and square pass, the puncture vanishes") {
  const auto golden = golden_rows("cdc.txt", "disk");
  const double c0 = golden[0][1];
  const DomainSpec disk = make_disk(0.0, 1.0, 1024), sq = make_square(0.0, 2.0, 64);
  const CDCReport rd = cdc_audit(disk, c0, 0.25, 16, 4);
  const CDCReport rs = cdc_audit(sq, c0, 0.25, 16, 4);
  CHECK(rd.pass);
  CHECK(rs.pass);
  CHECK(rd.min_ratio == doctest::Approx(golden[0][0]).epsilon(1e-4));
  CHECK(rs.min_ratio == doctest::Approx(golden_rows("cdc.txt", "square")[0][0]).epsilon(1e-4));

  const DomainSpec pd = make_punctured_disk(0.0, 1.0, 1024);
  const CDCRefinement at_puncture = cdc_refinement(pd, 0.0, 0.25, {16, 32, 64});
  CHECK(at_puncture.vanishing);
  const CDCRefinement at_circle = cdc_refinement(disk, 1.0, 0.25, {16, 32, 64});
  CHECK_FALSE(at_circle.vanishing);
  // the ratio at the puncture drops below the disk constant once the grid is fine enough
  CHECK(cdc_audit(pd, c0, 0.25, 16, 4, 64).min_ratio < c0);
}

TEST_CASE("Bourgain audit") {
  const double h = 1.0 / 64;
  for (const DomainSpec& d : {make_disk(0.0, 1.0, 1024), make_square(0.0, 2.0, 64)}) {
    const EllipticProblem prob(identity_on(d, h), d, h);
    const Point x0 = d.point_at(0, 0.1);
    const BourgainReport rep = bourgain_sweep(prob, x0, {0.2, 0.1, 0.05});
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
      CHECK(row.tau >= 0.3);
      CHECK(row.tau <= 1.0);
      CHECK(row.tau_disjoint > 0.05);
      CHECK(row.tau_disjoint < 1.0);
    }
    // E = the whole boundary
    const BourgainRow all = bourgain_audit(prob, x0, 2.0 * d.diameter());
    CHECK(std::abs(all.tau - 1.0) <= 1e-7);  // solver tolerance, as above
  }
}

TEST_CASE("Green and measure comparability match the golden intervals") {
  const double h = 1.0 / 128;
  const DomainSpec disk = make_disk(0.0, 1.0, 1024), sq = make_square(0.0, 2.0, 64);
  const std::vector<double> radii{0.125, 0.0625, 0.03125, 0.015625};
  const auto gd = golden_rows("comparability.txt", "disk_identity")[0];
  const ComparabilityReport cd = green_measure_comparability(identity_on(disk, h), disk, 1.0, radii, 0.0, h);
  CHECK(cd.pass);
  CHECK(cd.upper_lo == doctest::Approx(gd[0]).epsilon(1e-4));
  CHECK(cd.upper_hi == doctest::Approx(gd[1]).epsilon(1e-4));
  CHECK(cd.lower_lo == doctest::Approx(gd[2]).epsilon(1e-4));
  CHECK(cd.lower_hi == doctest::Approx(gd[3]).epsilon(1e-4));

  const auto gs = golden_rows("comparability.txt", "square_diag")[0];
  const MatrixField a =
      MatrixField::constant(Grid2D::covering(sq.lo(), sq.hi(), h, 2), (Mat2() << 2.0, 0.0, 0.0, 0.5).finished());
  const ComparabilityReport cs = green_measure_comparability(a, sq, Point(1, 0.3), radii, Point(-0.3, 0), h);
  CHECK(cs.pass);
  CHECK(cs.upper_lo == doctest::Approx(gs[0]).epsilon(1e-4));
  CHECK(cs.upper_hi == doctest::Approx(gs[1]).epsilon(1e-4));
  CHECK(cs.lower_lo == doctest::Approx(gs[2]).epsilon(1e-4));
  CHECK(cs.lower_hi == doctest::Approx(gs[3]).epsilon(1e-4));

  const auto ring = golden_rows("comparability.txt", "ring_identity")[0];
  const EllipticProblem prob(identity_on(disk, h), disk, h);
  for (double d : {0.2, 0.1, 0.05, 0.025})
    for (double v : ring_values(prob, Point(1 - d, 0))) {
      CHECK(v >= ring[0] * (1 - 1e-4));
      CHECK(v <= ring[1] * (1 + 1e-4));
    }
}

TEST_CASE("boundary measure CSV round trip") {
  const DomainSpec sq = make_square(0.0, 2.0, 4);
  const BoundaryMeasure m = harmonic_measure_wos(sq, Point(0.1, 0.2), boundary_partition(sq, 8), 1000, 1);
  std::stringstream ss;
  ss << "# config_sha256=abc seed=1\n";
  write_measure_csv(m, ss);
  const BoundaryMeasure back = read_measure_csv(ss);
  REQUIRE(back.weights.size() == m.weights.size());
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    CHECK(back.weights[j] == doctest::Approx(m.weights[j]).epsilon(1e-15));
    CHECK(back.partition.arcs[j].s0 == doctest::Approx(m.partition.arcs[j].s0).epsilon(1e-15));
  }
  CHECK(back.method == "wos");
  CHECK(back.pole == m.pole);
}

}  // TEST_SUITE
