#include "ncfem/coeffs.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ncfem {

namespace {
constexpr double kPi = std::numbers::pi;
}

CoefficientSet laplace_coefficients() {
  CoefficientSet c;
  c.a = [](const Vec2&) { return Eigen::Matrix2d::Identity().eval(); };
  c.b = [](const Vec2&) { return Vec2::Zero().eval(); };
  c.a0 = [](const Vec2&) { return 0.0; };
  c.div_b = [](const Vec2&) { return 0.0; };
  c.has_convection = false;
  return c;
}

CoefficientSet reaction_coefficients(double a0) {
  CoefficientSet c = laplace_coefficients();
  c.a0 = [a0](const Vec2&) { return a0; };
  return c;
}

double theta_branch(const Vec2& x) {
  if (x.x() == 0.0 && x.y() == 0.0) throw std::domain_error("theta_branch undefined at the origin");
  double th = std::atan2(x.y(), x.x());
  if (th < 0.0) th += 2.0 * kPi;
  return th;
}

ManufacturedCase make_example(double delta, double alpha, double nu) {
  if (!(alpha > -1.5)) throw std::invalid_argument("alpha must exceed -3/2");
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");

  ManufacturedCase mc;
  mc.delta = delta;
  mc.alpha = alpha;
  mc.nu = nu;
  const double lam = 2.0 / 3.0;
  mc.lambda = lam;

  auto polar = [](const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) throw std::domain_error("field singular at the origin");
    return std::pair<double, double>(r, theta_branch(x));
  };

  mc.exact_y = [lam](const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    return std::pow(r, lam) * std::cos(lam * theta_branch(x));
  };
  mc.exact_phi = [y = mc.exact_y](const Vec2& x) { return -y(x); };
  mc.exact_u = [y = mc.exact_y, nu](const Vec2& x) { return y(x) / nu; };

  mc.grad_y = [lam, polar](const Vec2& x) {
    const auto [r, th] = polar(x);
    const double s = lam * std::pow(r, lam - 1.0);
    const double ang = (lam - 1.0) * th;
    return Vec2(s * std::cos(ang), -s * std::sin(ang));
  };
  mc.grad_phi = [g = mc.grad_y](const Vec2& x) { return (-g(x)).eval(); };

  CoefficientSet& co = mc.coeffs;
  co.a = [](const Vec2&) { return Eigen::Matrix2d::Identity().eval(); };
  co.b = [delta, alpha, polar](const Vec2& x) {
    const auto [r, th] = polar(x);
    (void)th;
    return (delta * std::pow(r, alpha) * x).eval();
  };
  co.a0 = [alpha, polar](const Vec2& x) { return std::pow(polar(x).first, alpha); };
  co.div_b = [delta, alpha, polar](const Vec2& x) {
    return delta * (alpha + 2.0) * std::pow(polar(x).first, alpha);
  };
  co.singular_points = {Vec2(0.0, 0.0)};
  co.has_convection = delta > 0.0;

  // With -Lap y = 0 away from the corner:  f = b.grad y + a0 y; both terms
  // share the factor r^(alpha+lambda) cos(lambda theta).
  mc.f = [delta, alpha, lam, polar](const Vec2& x) {
    const auto [r, th] = polar(x);
    return (delta * lam + 1.0) * std::pow(r, alpha + lam) * std::cos(lam * th);
  };
  // y_d = y + div(phi b) - a0 phi with phi = -y.
  const double cdata = 1.0 - delta * (alpha + 2.0) - delta * lam;
  mc.y_d = [cdata, alpha, lam, polar](const Vec2& x) {
    const auto [r, th] = polar(x);
    return std::cos(lam * th) * (std::pow(r, lam) + cdata * std::pow(r, alpha + lam));
  };
  mc.y_minus_yd = [cdata, alpha, lam, polar](const Vec2& x) {
    const auto [r, th] = polar(x);
    return -cdata * std::pow(r, alpha + lam) * std::cos(lam * th);
  };

  mc.dn_y = [g = mc.grad_y](const Vec2& x, const Vec2& n) { return g(x).dot(n); };
  mc.g_y = [g = mc.grad_y, u = mc.exact_u](const Vec2& x, const Vec2& n) {
    return g(x).dot(n) - u(x);
  };
  mc.g_phi = [gp = mc.grad_phi, phi = mc.exact_phi, b = co.b](const Vec2& x, const Vec2& n) {
    return gp(x).dot(n) + phi(x) * b(x).dot(n);
  };
  return mc;
}

Vec2 eval_exact_gradient(const ManufacturedCase& mc, const Vec2& x) { return mc.grad_y(x); }

}  // namespace ncfem
