#include "ncfem/domain.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ncfem;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle for the corner exponent: shooting on the angular ODE
// of the separated solution r^lambda f(theta) of the constant-coefficient
// corner operator with conormal conditions on the rays theta = +-omega/2.
// The smallest positive root of the terminal boundary residual is found by
// scan + bisection.
double corner_exponent_shooting(double omega, const Eigen::Matrix2d& a) {
  auto coefs = [&](double th) {
    const Vec2 er(std::cos(th), std::sin(th));
    const Vec2 et(-std::sin(th), std::cos(th));
    return std::array<double, 3>{er.dot(a * er), er.dot(a * et), et.dot(a * et)};
  };
  auto residual = [&](double lam) {
    const double t0 = -0.5 * omega, t1 = 0.5 * omega;
    const int n = 4000;
    const double h = (t1 - t0) / n;
    auto c0 = coefs(t0);
    double f = 1.0;
    double fp = -lam * f * c0[1] / c0[2];
    auto rhs = [&](double th, double f_, double fp_) {
      const auto c = coefs(th);
      // c_tt f'' + 2 (lam-1) c_rt f' + lam ((lam-1) c_rr + c_tt) f = 0
      return -(2.0 * (lam - 1.0) * c[1] * fp_ + lam * ((lam - 1.0) * c[0] + c[2]) * f_) / c[2];
    };
    for (int i = 0; i < n; ++i) {
      const double th = t0 + i * h;
      const double k1f = fp, k1p = rhs(th, f, fp);
      const double k2f = fp + 0.5 * h * k1p,
                   k2p = rhs(th + 0.5 * h, f + 0.5 * h * k1f, fp + 0.5 * h * k1p);
      const double k3f = fp + 0.5 * h * k2p,
                   k3p = rhs(th + 0.5 * h, f + 0.5 * h * k2f, fp + 0.5 * h * k2p);
      const double k4f = fp + h * k3p, k4p = rhs(th + h, f + h * k3f, fp + h * k3p);
      f += h / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f);
      fp += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    }
    const auto c1 = coefs(t1);
    return lam * f * c1[1] + fp * c1[2];
  };
  double prev = residual(0.05);
  for (double lam = 0.10; lam < 8.0; lam += 0.05) {
    const double cur = residual(lam);
    if (prev * cur <= 0.0) {
      double lo = lam - 0.05, hi = lam;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (residual(lo) * residual(mid) <= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = cur;
  }
  return -1.0;
}

}  // namespace

TEST_CASE("lshape geometry") {
  const PolygonDomain dom = make_lshape();
  CHECK(dom.num_vertices() == 6);
  CHECK(dom.corner(0).omega == doctest::Approx(1.5 * kPi).epsilon(1e-14));
  CHECK(dom.corner(0).lambda == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  for (int j = 1; j < 6; ++j) {
    CHECK(dom.corner(j).omega == doctest::Approx(0.5 * kPi).epsilon(1e-14));
    CHECK(dom.corner(j).lambda == doctest::Approx(2.0).epsilon(1e-14));
  }
  CHECK(dom.signed_area() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(dom.perimeter() == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(dom.lambda_min() == doctest::Approx(2.0 / 3.0));
  CHECK(dom.corner(0).beta == 0.0);  // metadata only
}

TEST_CASE("polygon validation") {
  CHECK_THROWS_AS(make_polygon({{0, 0}, {1, 0}}), std::invalid_argument);
  // clockwise orientation rejected
  CHECK_THROWS_AS(make_polygon({{0, 0}, {0, 1}, {1, 0}}), std::invalid_argument);
  // self-intersecting bow tie rejected
  CHECK_THROWS_AS(make_polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), std::invalid_argument);
  // repeated vertex rejected
  CHECK_THROWS_AS(make_polygon({{0, 0}, {0, 0}, {1, 0}, {0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(domain_preset("no-such-domain"), std::invalid_argument);
  CHECK(domain_preset("unit-square").signed_area() == doctest::Approx(1.0));
  CHECK(domain_preset("lshape").num_vertices() == 6);

  // grading list broadcasts from a scalar or must match the vertex count
  const PolygonDomain g = make_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0.5});
  for (const CornerData& c : g.corners()) CHECK(c.mu == 0.5);
  CHECK_THROWS_AS(make_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("singular exponent, identity diffusion") {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  CHECK(singular_exponent({1.5 * kPi, 1, 1, 0}, I) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(singular_exponent({0.5 * kPi, 1, 1, 0}, I) == doctest::Approx(2.0).epsilon(1e-14));
  // lambda * omega = pi for the Laplacian
  for (double omega : {0.3, 1.0, 2.5, 4.0, 5.9}) {
    CHECK(singular_exponent({omega, 1, 1, 0}, I) * omega == doctest::Approx(kPi).epsilon(1e-14));
  }
}

TEST_CASE("singular exponent, anisotropic diffusion vs shooting oracle") {
  Eigen::Matrix2d a;
  a << 4.0, 0.0, 0.0, 1.0;
  const double omega = 0.5 * kPi;
  const double lam = singular_exponent({omega, 1, 1, 0}, a);
  // The mapped opening is 2*atan(2).
  CHECK(lam == doctest::Approx(kPi / (2.0 * std::atan(2.0))).epsilon(1e-13));
  CHECK(lam == doctest::Approx(corner_exponent_shooting(omega, a)).epsilon(1e-8));

  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const double d1 = 0.5 + 3.0 * unif(rng);
    const double d2 = 0.5 + 3.0 * unif(rng);
    const double c = unif(rng) * kPi;
    Eigen::Matrix2d rot;
    rot << std::cos(c), -std::sin(c), std::sin(c), std::cos(c);
    const Eigen::Matrix2d m =
        rot * Eigen::DiagonalMatrix<double, 2>(d1, d2) * rot.transpose();
    const double w = 0.4 * kPi + unif(rng) * kPi;
    CHECK(singular_exponent({w, 1, 1, 0}, m) ==
          doctest::Approx(corner_exponent_shooting(w, m)).epsilon(1e-7));
  }
}

TEST_CASE("singular exponent scaling invariance and SPD check") {
  Eigen::Matrix2d a;
  a << 3.0, 1.0, 1.0, 2.0;
  const CornerData c{1.2, 1, 1, 0};
  const double base = singular_exponent(c, a);
  for (double s : {0.3, 7.5, 120.0}) {
    CHECK(singular_exponent(c, (s * a).eval()) == doctest::Approx(base).epsilon(1e-12));
  }
  Eigen::Matrix2d indef;
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(singular_exponent(c, indef), std::invalid_argument);
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(singular_exponent(c, asym), std::invalid_argument);
}
