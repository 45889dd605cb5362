#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "qclab/beltrami_solver.hpp"
#include "qclab/matrix_field.hpp"
#include "qclab/qc_map.hpp"

using namespace qclab;

namespace {

Mat2 diag(double a, double b) { return (Mat2() << a, 0.0, 0.0, b).finished(); }

// Brute force sup <A xi, eta> / |xi||eta| and inf <A xi, xi> / |xi|^2 over angles.
double brute_lambda(const Mat2& a) {
  double norm = 0.0, low = 1e300;
  const int n = 3600;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d xi(std::cos(2 * kPi * i / n), std::sin(2 * kPi * i / n));
    low = std::min(low, xi.dot(a * xi));
    for (int j = 0; j < n; j += 4) {
      const Eigen::Vector2d eta(std::cos(2 * kPi * j / n), std::sin(2 * kPi * j / n));
      norm = std::max(norm, std::abs(eta.dot(a * xi)));
    }
  }
  return std::max(1.0 / low, norm);
}

Mat2 random_spd(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Mat2 m;
  m << u(rng), u(rng), u(rng), u(rng);
  return m * m.transpose() + 0.3 * Mat2::Identity();
}

Mat2 det_one(Mat2 m) { return m / std::sqrt(m.determinant()); }

Grid2D small_grid() { return Grid2D::covering(Point(-1, -1), Point(1, 1), 1.0 / 16, 0); }

}  // namespace

TEST_SUITE("matrix_field") {

TEST_CASE("ellipticity of the reference matrices") {
  const Grid2D g = small_grid();
  auto rep = ellipticity_constant(MatrixField::constant(g, Mat2::Identity()));
  CHECK(rep.lambda_global == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rep.K == doctest::Approx(1.0).epsilon(1e-14));

  rep = ellipticity_constant(MatrixField::constant(g, diag(2, 0.5)));
  CHECK(rep.lambda_global == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(rep.symmetric);
  CHECK(rep.K == doctest::Approx(2.0).epsilon(1e-14));

  Mat2 rot;
  rot << 1, 1, -1, 1;
  rep = ellipticity_constant(MatrixField::constant(g, rot));
  CHECK(rep.lambda_global == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_FALSE(rep.symmetric);
  CHECK(rep.K == doctest::Approx(std::sqrt(2.0) + 1.0).epsilon(1e-12));
  CHECK(brute_lambda(rot) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("cell_lambda agrees with brute force on random matrices") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int n = 0; n < 20; ++n) {
    Mat2 a = random_spd(rng, 1.0);
    a(0, 1) += u(rng);  // break symmetry, keep the symmetric part SPD
    CHECK(cell_lambda(a) == doctest::Approx(brute_lambda(a)).epsilon(1e-5));
  }
}

TEST_CASE("NotElliptic when the symmetric part is not positive") {
  const Grid2D g = small_grid();
  CHECK_THROWS_AS(ellipticity_constant(MatrixField::constant(g, diag(1, -1))), Error);
}

TEST_CASE("K_lambda is monotone and continuous at 1") {
  CHECK(k_lambda(1.0, true) == 1.0);
  CHECK(k_lambda(1.0, false) == 1.0);
  CHECK(k_lambda(1.0 + 1e-12, false) == doctest::Approx(1.0).epsilon(1e-5));
  double prev_s = 1.0, prev_g = 1.0;
  for (double l = 1.0; l <= 10.0; l += 0.01) {
    CHECK(k_lambda(l, true) >= prev_s);
    CHECK(k_lambda(l, false) >= prev_g);
    prev_s = k_lambda(l, true);
    prev_g = k_lambda(l, false);
  }
  CHECK(k_lambda(2.0, false) == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("Beltrami coefficients of the reference matrices") {
  const Grid2D g = small_grid();
  auto b = beltrami_coefficients(MatrixField::constant(g, Mat2::Identity()));
  CHECK(std::abs(b.mu.values[0]) == 0.0);
  CHECK(std::abs(b.nu.values[0]) == 0.0);

  b = beltrami_coefficients(MatrixField::constant(g, diag(2, 0.5)));
  CHECK(std::abs(b.mu.values[5] - Complex(-1.0 / 3.0)) < 1e-14);
  CHECK(std::abs(b.nu.values[5]) < 1e-14);
  CHECK(b.bound == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(b.bound_holds);

  Mat2 rot;
  rot << 1, 1, -1, 1;
  b = beltrami_coefficients(MatrixField::constant(g, rot));
  CHECK(std::abs(b.mu.values[3]) < 1e-14);
  CHECK(std::abs(b.nu.values[3] - Complex(-1.0, 2.0) / 5.0) < 1e-14);
  CHECK(std::abs(b.nu.values[3]) == doctest::Approx(std::sqrt(5.0) / 5.0).epsilon(1e-14));
  // |nu| exceeds (K-1)/(K+1) for K = sqrt 2 + 1; the two-sided constant covers it
  const double k = std::sqrt(2.0) + 1.0;
  CHECK(std::abs(b.nu.values[3]) > (k - 1) / (k + 1));
  CHECK(b.bound_holds);
}

TEST_CASE("sup(|mu| + |nu|) bound over random elliptic fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const Grid2D g = small_grid();
  for (int n = 0; n < 10; ++n) {
    const Mat2 base = random_spd(rng, 0.8);
    const bool sym = n % 2 == 0;
    MatrixField a = MatrixField::from_function(g, [&](Point z) {
      Mat2 m = base + 0.1 * std::sin(3 * z.real()) * Mat2::Identity();
      if (!sym) {
        m(0, 1) += 0.15 * std::cos(2 * z.imag());
        m(1, 0) -= 0.1;
      }
      return m;
    });
    a.detect_flags();
    const auto b = beltrami_coefficients(a);
    CHECK(b.sup_sum <= b.bound + 1e-12);
    if (sym) {
      const auto rep = ellipticity_constant(a);
      CHECK(b.sup_sum <= (rep.K - 1) / (rep.K + 1) + 1e-12);
    }
  }
}

TEST_CASE("mu for a solution") {
  const Grid2D g = small_grid();
  ComplexField grad(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : grad.values) v = Complex(u(rng), u(rng));

  auto r = mu_for_solution(MatrixField::constant(g, Mat2::Identity()), grad);
  for (const auto& v : r.field.mu.values) CHECK(std::abs(v) < 1e-15);

  const Mat2 s = det_one(random_spd(rng, 1.0));
  r = mu_for_solution(MatrixField::constant(g, s), grad);
  const Complex mu_a = beltrami_pair(s).first;
  for (const auto& v : r.field.mu.values) CHECK(std::abs(v - mu_a) < 1e-14);

  Mat2 rot;
  rot << 1, 1, -1, 1;
  ComplexField ux(g, Complex(1.0, 0.0));
  r = mu_for_solution(MatrixField::constant(g, rot), ux);
  const Complex nu = Complex(-1.0, 2.0) / 5.0;
  const Complex expected = nu * Complex(2, -1) / Complex(2, 1);
  CHECK(std::abs(r.field.mu.values[7] - expected) < 1e-14);
}

TEST_CASE("interpolate_det1 endpoints and the half-way coefficient") {
  const Grid2D g = small_grid();
  const MatrixField a = MatrixField::constant(g, diag(2, 0.5));
  const MatrixField one = interpolate_det1(a, RealField(g, 1.0));
  const MatrixField zero = interpolate_det1(a, RealField(g, 0.0));
  CHECK((one.at(4) - diag(2, 0.5)).norm() < 1e-14);
  CHECK((zero.at(4) - Mat2::Identity()).norm() < 1e-14);
  const auto half = beltrami_coefficients(interpolate_det1(a, RealField(g, 0.5)));
  CHECK(std::abs(half.mu.values[9] - Complex(-1.0 / 6.0)) < 1e-12);

  MatrixField nonsym = MatrixField::constant(g, (Mat2() << 1, 0.5, 0, 1).finished());
  nonsym.detect_flags();
  CHECK_THROWS_AS(interpolate_det1(nonsym, RealField(g, 0.5)), Error);
}

TEST_CASE("interpolate_det1 scales mu pointwise") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const Grid2D g = small_grid();
  for (int n = 0; n < 5; ++n) {
    const Mat2 base = det_one(random_spd(rng, 1.5));
    MatrixField a = MatrixField::from_function(g, [&](Point z) {
      const double c = std::cos(z.real()), s = std::sin(z.real());
      Mat2 q;
      q << c, -s, s, c;
      return Mat2(q * base * q.transpose());
    });
    a.detect_flags();
    RealField cut(g);
    for (auto& v : cut.values) v = u(rng);
    const MatrixField ah = interpolate_det1(a, cut);
    CHECK(ah.symmetric);
    CHECK(ah.const_det);
    const auto ba = beltrami_coefficients(a), bh = beltrami_coefficients(ah);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(std::abs(bh.mu.values[k] - cut.values[k] * ba.mu.values[k]) < 1e-10);
      CHECK(std::abs(ah.at(k).determinant() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("spd_sqrt") {
  CHECK((spd_sqrt(diag(4, 1)) - diag(2, 1)).norm() < 1e-15);
  CHECK((spd_sqrt(Mat2::Identity()) - Mat2::Identity()).norm() < 1e-15);
  std::mt19937_64 rng(9);
  for (int n = 0; n < 50; ++n) {
    const Mat2 c = random_spd(rng, 2.0);
    const Mat2 s = spd_sqrt(c);
    CHECK((s - s.transpose()).norm() < 1e-14);
    CHECK((s.transpose() * s - c).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(spd_sqrt(diag(1, -1)), Error);
}

TEST_CASE("freeze_and_normalize") {
  const Grid2D g = small_grid();
  const Mat2 c = (Mat2() << 1.5, 0.3, 0.3, 0.8).finished();
  FrozenField f = freeze_and_normalize(MatrixField::constant(g, c), Point(0.1, -0.2));
  for (std::size_t k = 0; k < f.m.grid.size(); k += 7) CHECK((f.m.at(k) - Mat2::Identity()).norm() < 1e-12);

  // symmetric with constant determinant 2
  MatrixField a = MatrixField::from_function(g, [](Point z) {
    const double t = 0.05 * std::sin(2 * z.real() + z.imag());
    Mat2 m;
    m << std::exp(t), 0.02 * z.real(), 0.02 * z.real(), 0.0;
    m(1, 1) = (1.0 + m(0, 1) * m(0, 1)) / m(0, 0);
    return Mat2(std::sqrt(2.0) * m);
  });
  a.detect_flags();
  REQUIRE(a.symmetric);
  REQUIRE(a.const_det);
  f = freeze_and_normalize(a, Point(0.25, 0.25));
  CHECK(f.m.symmetric);
  double worst = 0;
  for (std::size_t k = 0; k < f.m.grid.size(); ++k) worst = std::max(worst, std::abs(f.m.at(k).determinant() - 1.0));
  CHECK(worst < 1e-9);
  CHECK((f.value(f.xi_pulled) - Mat2::Identity()).norm() < 1e-12);

  for (double eps : {0.01, 0.05}) {
    MatrixField p = MatrixField::from_function(g, [eps](Point z) {
      Mat2 e;
      e << std::sin(3 * z.real()), std::cos(z.imag()), std::cos(z.imag()), std::sin(2 * z.imag());
      return Mat2(Mat2::Identity() + eps * e);
    });
    p.detect_flags();
    const FrozenField fr = freeze_and_normalize(p, Point(0, 0));
    CHECK(ellipticity_constant(fr.m).lambda_global <= fr.bound + 1e-12);
  }
  MatrixField big = MatrixField::from_function(g, [](Point z) {
    return Mat2(Mat2::Identity() * (1.0 + 0.9 * z.real() * z.real()));
  });
  big.detect_flags();
  CHECK_THROWS_AS(freeze_and_normalize(big, Point(0, 0)), Error);
}

TEST_CASE("pushforward under the identity and a rigid motion") {
  const Grid2D g = small_grid();
  MatrixField a = MatrixField::from_function(g, [](Point z) {
    return (Mat2() << 2.0 + 0.3 * std::sin(z.real()), 0.1, 0.1, 1.0).finished();
  });
  a.detect_flags();
  const auto id = pushforward_matrix(a, QCMap::identity(g));
  for (std::size_t k = 0; k < g.size(); k += 5) CHECK((id.field.at(k) - a.at(k)).norm() < 1e-12);

  const Complex rot = std::polar(1.0, 0.7);
  const QCMap rigid = QCMap::from_function(g, [rot](Point z) { return rot * z + Point(0.2, -0.1); });
  const auto ident = pushforward_matrix(MatrixField::constant(Grid2D::covering(Point(-2.0, -2.0), Point(2.0, 2.0), 1.0 / 16, 0),
                                                              Mat2::Identity()),
                                        rigid);
  CHECK(ident.singular_count == 0);
  for (std::size_t k = 0; k < g.size(); k += 3) CHECK((ident.field.at(k) - Mat2::Identity()).norm() < 1e-10);
}

TEST_CASE("pushforward by the solver map of a det-1 field is Id on the inverse side") {
  // A symmetric det 1; f = phi_A^-1 maps A to Id
  const Mat2 a0 = diag(2, 0.5);
  const Grid2D box = Grid2D::box(8, 512);
  auto weight = [](Point z) {
    const double r = std::abs(z);
    return r < 1.0 ? 1.0 : (r > 1.5 ? 0.0 : 0.5 * (1 + std::cos(kPi * (r - 1.0) / 0.5)));
  };
  const QCMap phi = principal_solution(
      sample_beltrami(box, [&](Point z) { return beltrami_pair(interpolate_det1(a0, weight(z))).first; }, 2,
                      Sampling::LowPass));
  const Grid2D image = Grid2D::covering(Point(-0.6, -0.6), Point(0.6, 0.6), 1.0 / 64, 0);
  const QCMap inv = inverse_as_map(phi, image);
  const Grid2D src = Grid2D::covering(Point(-1.5, -1.5), Point(1.5, 1.5), 1.0 / 64, 0);
  MatrixField a = MatrixField::from_function(src, [&](Point z) { return interpolate_det1(a0, weight(z)); });
  a.detect_flags();
  const auto res = pushforward_matrix(a, inv);
  double worst = 0;
  for (std::size_t k = 0; k < image.size(); ++k) {
    if (res.singular[k]) continue;
    worst = std::max(worst, (res.field.at(k) - Mat2::Identity()).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 0.05);
}

TEST_CASE("pushforward then pull back returns A with O(h) error") {
  const auto map = [](Point z) { return z + 0.1 * z * z + Point(0.05, 0.0); };
  const double err_h = [&] {
    double e[2];
    for (int r = 0; r < 2; ++r) {
      const double h = r == 0 ? 1.0 / 16 : 1.0 / 32;
      const Grid2D g = Grid2D::covering(Point(-0.5, -0.5), Point(0.5, 0.5), h, 0);
      const Grid2D big = Grid2D::covering(Point(-1.2, -1.2), Point(1.2, 1.2), h, 0);
      MatrixField a = MatrixField::from_function(big, [](Point z) {
        return (Mat2() << 2.0 + z.real(), 0.2, 0.2, 1.0).finished();
      });
      const QCMap f = QCMap::from_function(g, map);
      const Grid2D ig = Grid2D::covering(Point(-0.35, -0.35), Point(0.35, 0.35), h, 0);
      const QCMap finv = inverse_as_map(f, ig);
      const auto forward = pushforward_matrix(a, f);  // on g, in terms of A on the image
      const auto back = pushforward_matrix(forward.field, finv);
      double worst = 0;
      for (std::size_t k = 0; k < ig.size(); ++k) {
        const Point z = ig.node(k);
        if (std::abs(z.real()) > 0.25 || std::abs(z.imag()) > 0.25) continue;
        worst = std::max(worst, (back.field.at(k) - a.eval(z)).cwiseAbs().maxCoeff());
      }
      e[r] = worst;
    }
    return e[1] / e[0];
  }();
  CHECK(err_h < 0.75);
}

TEST_CASE("inverse side matrices") {
  CHECK((inverse_side_b(Mat2::Identity()) - Mat2::Identity()).norm() < 1e-15);
  CHECK((inverse_side_bstar(Mat2::Identity()) - Mat2::Identity()).norm() < 1e-15);
  const Mat2 b = inverse_side_b(diag(2, 0.5));
  CHECK((b - diag(0.5, 0.5)).norm() < 1e-15);
  CHECK(cell_lambda(b) == doctest::Approx(2.0).epsilon(1e-14));

  const Grid2D g = small_grid();
  const auto id = inverse_side_matrices(MatrixField::constant(g, Mat2::Identity()), QCMap::identity(g), g);
  for (std::size_t k = 0; k < g.size(); k += 11) {
    CHECK((id.b.at(k) - Mat2::Identity()).norm() < 1e-12);
    CHECK((id.bstar.at(k) - Mat2::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("matrix field file round trip") {
  const Grid2D g = small_grid();
  MatrixField a = MatrixField::from_function(g, [](Point z) {
    return (Mat2() << 1 + z.real() * z.real(), 0.1 * z.imag(), -0.2, 2.0).finished();
  });
  a.detect_flags();
  const std::string path = "matrix_roundtrip.grid";
  write_matrix_field(a, path);
  const MatrixField b = read_matrix_field(path);
  CHECK(b.grid == a.grid);
  CHECK(b.a12 == a.a12);
  CHECK(b.a21 == a.a21);
  CHECK(b.symmetric == a.symmetric);
  std::remove(path.c_str());
}

}  // TEST_SUITE
