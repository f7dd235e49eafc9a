#include "ncfem/domain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ncfem {

namespace {

constexpr double kPi = std::numbers::pi;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Proper segment intersection test (shared endpoints excluded by the caller).
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double polygon_signed_area(const std::vector<Vec2>& v) {
  double s = 0.0;
  const int m = static_cast<int>(v.size());
  for (int j = 0; j < m; ++j) {
    const Vec2& p = v[static_cast<size_t>(j)];
    const Vec2& q = v[static_cast<size_t>((j + 1) % m)];
    s += cross2(p, q);
  }
  return 0.5 * s;
}

}  // namespace

PolygonDomain::PolygonDomain(std::vector<Vec2> vertices, std::vector<CornerData> corners)
    : vertices_(std::move(vertices)), corners_(std::move(corners)) {
  if (vertices_.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  if (vertices_.size() != corners_.size())
    throw std::invalid_argument("corner data size must match vertex count");
  const int m = num_vertices();
  for (int j = 0; j < m; ++j) {
    if ((vertex(j) - vertex((j + 1) % m)).norm() < 1e-14)
      throw std::invalid_argument("consecutive polygon vertices coincide");
  }
  if (polygon_signed_area(vertices_) <= 0.0)
    throw std::invalid_argument("polygon vertices must be ordered counterclockwise");
  // Simplicity: no side may properly cross another.
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (j == i || (j + 1) % m == i || (i + 1) % m == j) continue;
      if (segments_intersect(vertex(i), vertex((i + 1) % m), vertex(j), vertex((j + 1) % m)))
        throw std::invalid_argument("polygon is self-intersecting");
    }
  }
  for (int j = 0; j < m; ++j) {
    const CornerData& c = corner(j);
    const double ang = interior_angle(vertices_, j);
    if (std::abs(ang - c.omega) > 1e-12)
      throw std::invalid_argument("corner angle does not match polygon geometry");
    if (!(c.omega > 0.0 && c.omega < 2.0 * kPi))
      throw std::invalid_argument("interior angle must lie in (0, 2*pi)");
    if (!(c.lambda > 0.0)) throw std::invalid_argument("singular exponent must be positive");
    if (!(c.mu > 0.0 && c.mu <= 1.0))
      throw std::invalid_argument("grading parameter must lie in (0, 1]");
    if (!(c.beta >= 0.0 && c.beta < 1.0))
      throw std::invalid_argument("corner weight must lie in [0, 1)");
  }
}

Vec2 PolygonDomain::side_tangent(int j) const {
  const Vec2 d = vertex((j + 1) % num_vertices()) - vertex(j);
  return d.normalized();
}

Vec2 PolygonDomain::side_normal(int j) const {
  const Vec2 t = side_tangent(j);
  return Vec2(t.y(), -t.x());  // boundary runs counterclockwise, interior on the left
}

double PolygonDomain::side_length(int j) const {
  return (vertex((j + 1) % num_vertices()) - vertex(j)).norm();
}

double PolygonDomain::signed_area() const { return polygon_signed_area(vertices_); }

double PolygonDomain::perimeter() const {
  double s = 0.0;
  for (int j = 0; j < num_sides(); ++j) s += side_length(j);
  return s;
}

double PolygonDomain::lambda_min() const {
  double lam = corners_.front().lambda;
  for (const CornerData& c : corners_) lam = std::min(lam, c.lambda);
  return lam;
}

double interior_angle(const std::vector<Vec2>& vertices, int j) {
  const int m = static_cast<int>(vertices.size());
  const Vec2& x = vertices[static_cast<size_t>(j)];
  const Vec2 d_out = (vertices[static_cast<size_t>((j + 1) % m)] - x).normalized();
  const Vec2 d_in = (vertices[static_cast<size_t>((j + m - 1) % m)] - x).normalized();
  double ang = std::atan2(d_in.y(), d_in.x()) - std::atan2(d_out.y(), d_out.x());
  if (ang <= 0.0) ang += 2.0 * kPi;
  return ang;
}

PolygonDomain make_polygon(std::vector<Vec2> vertices, const std::vector<double>& mu) {
  const int m = static_cast<int>(vertices.size());
  if (m < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  if (!mu.empty() && mu.size() != 1 && static_cast<int>(mu.size()) != m)
    throw std::invalid_argument("grading list must be scalar or one value per vertex");
  std::vector<CornerData> corners(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    CornerData& c = corners[static_cast<size_t>(j)];
    c.omega = interior_angle(vertices, j);
    c.lambda = kPi / c.omega;
    c.mu = mu.empty() ? 1.0 : (mu.size() == 1 ? mu[0] : mu[static_cast<size_t>(j)]);
  }
  return PolygonDomain(std::move(vertices), std::move(corners));
}

PolygonDomain make_lshape() {
  std::vector<Vec2> v = {{0.0, 0.0}, {1.0, 0.0},  {1.0, 1.0},
                         {-1.0, 1.0}, {-1.0, -1.0}, {0.0, -1.0}};
  return make_polygon(std::move(v));
}

PolygonDomain make_unit_square() {
  std::vector<Vec2> v = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  return make_polygon(std::move(v));
}

PolygonDomain domain_preset(const std::string& name) {
  if (name == "lshape") return make_lshape();
  if (name == "unit-square") return make_unit_square();
  throw std::invalid_argument("unknown domain preset: " + name);
}

double singular_exponent_with_tangents(const Vec2& t_out, const Vec2& t_in,
                                       const Eigen::Matrix2d& a_corner) {
  if ((a_corner - a_corner.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * a_corner.cwiseAbs().maxCoeff())
    throw std::invalid_argument("corner coefficient matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a_corner);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("corner coefficient matrix must be positive definite");
  const Eigen::Matrix2d inv_sqrt = es.operatorInverseSqrt();
  const Vec2 s_out = inv_sqrt * t_out;
  const Vec2 s_in = inv_sqrt * t_in;
  double opening = std::atan2(s_in.y(), s_in.x()) - std::atan2(s_out.y(), s_out.x());
  if (opening <= 0.0) opening += 2.0 * kPi;
  return kPi / opening;
}

double singular_exponent(const CornerData& corner, const Eigen::Matrix2d& a_corner) {
  const double half = 0.5 * corner.omega;
  return singular_exponent_with_tangents(Vec2(std::cos(-half), std::sin(-half)),
                                         Vec2(std::cos(half), std::sin(half)), a_corner);
}

}  // namespace ncfem
