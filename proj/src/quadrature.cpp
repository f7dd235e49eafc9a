#include "ncfem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace ncfem {

namespace {

TriRule make_tri_rule_deg4() {
  TriRule r;
  r.degree = 4;
  const double a1 = 0.445948490915965, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, w2 = 0.109951743655322;
  for (const auto& [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    r.bary.push_back({b, a, a});
    r.bary.push_back({a, b, a});
    r.bary.push_back({a, a, b});
    r.weights.insert(r.weights.end(), 3, w);
  }
  return r;
}

TriRule make_tri_rule_deg8() {
  TriRule r;
  r.degree = 8;
  r.bary.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(0.144315607677787);
  struct Orbit3 {
    double a, w;
  };
  for (const Orbit3& o : {Orbit3{0.459292588292723, 0.095091634413923},
                          Orbit3{0.170569307751760, 0.103217370534718},
                          Orbit3{0.050547228317031, 0.032458497623198}}) {
    const double b = 1.0 - 2.0 * o.a;
    r.bary.push_back({b, o.a, o.a});
    r.bary.push_back({o.a, b, o.a});
    r.bary.push_back({o.a, o.a, b});
    r.weights.insert(r.weights.end(), 3, o.w);
  }
  {
    const double a = 0.008394777409958, b = 0.263112829634638;
    const double c = 1.0 - a - b;
    const double w = 0.027230314174435;
    r.bary.push_back({a, b, c});
    r.bary.push_back({b, c, a});
    r.bary.push_back({c, a, b});
    r.bary.push_back({a, c, b});
    r.bary.push_back({b, a, c});
    r.bary.push_back({c, b, a});
    r.weights.insert(r.weights.end(), 6, w);
  }
  // The published coefficients carry ~1e-10 rounding; renormalize so that
  // constants integrate exactly.
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  for (double& w : r.weights) w /= sum;
  return r;
}

EdgeRule make_edge_rule(int points) {
  // Gauss-Legendre nodes/weights on [-1, 1], mapped to [0, 1].
  std::vector<std::pair<double, double>> gl;
  if (points == 4) {
    gl = {{-0.8611363115940526, 0.3478548451374538},
          {-0.3399810435848563, 0.6521451548625461},
          {0.3399810435848563, 0.6521451548625461},
          {0.8611363115940526, 0.3478548451374538}};
  } else if (points == 8) {
    gl = {{-0.9602898564975363, 0.1012285362903763},
          {-0.7966664774136267, 0.2223810344533745},
          {-0.5255324099163290, 0.3137066458778873},
          {-0.1834346424956498, 0.3626837833783620},
          {0.1834346424956498, 0.3626837833783620},
          {0.5255324099163290, 0.3137066458778873},
          {0.7966664774136267, 0.2223810344533745},
          {0.9602898564975363, 0.1012285362903763}};
  } else {
    throw std::invalid_argument("unsupported edge rule");
  }
  EdgeRule r;
  r.degree = 2 * points - 1;
  for (const auto& [x, w] : gl) {
    r.t.push_back(0.5 * (x + 1.0));
    r.weights.push_back(0.5 * w);
  }
  return r;
}

}  // namespace

const TriRule& tri_rule(int degree) {
  static const TriRule d4 = make_tri_rule_deg4();
  static const TriRule d8 = make_tri_rule_deg8();
  if (degree <= 4) return d4;
  if (degree <= 8) return d8;
  throw std::invalid_argument("unsupported triangle rule degree");
}

const EdgeRule& edge_rule(int degree) {
  static const EdgeRule e4 = make_edge_rule(4);
  static const EdgeRule e8 = make_edge_rule(8);
  if (degree <= 7) return e4;
  if (degree <= 15) return e8;
  throw std::invalid_argument("unsupported edge rule degree");
}

void for_each_tri_point(
    const Vec2& p0, const Vec2& p1, const Vec2& p2, const TriRule& rule,
    const CornerSubdivision* subdiv,
    const std::function<void(const Vec2&, double, const std::array<double, 3>&)>& visit) {
  const double area2 = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  const double area = 0.5 * area2;

  // One sub-cell given by barycentric corners (with respect to p0,p1,p2),
  // red-refined `lev` more times.
  auto run_cell = [&](const auto& self, const std::array<double, 3>& c0,
                      const std::array<double, 3>& c1, const std::array<double, 3>& c2,
                      double frac, int lev) -> void {
    if (lev > 0) {
      auto mid = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return std::array<double, 3>{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]),
                                     0.5 * (a[2] + b[2])};
      };
      const auto m01 = mid(c0, c1), m12 = mid(c1, c2), m02 = mid(c0, c2);
      self(self, c0, m01, m02, 0.25 * frac, lev - 1);
      self(self, m01, c1, m12, 0.25 * frac, lev - 1);
      self(self, m02, m12, c2, 0.25 * frac, lev - 1);
      self(self, m01, m12, m02, 0.25 * frac, lev - 1);
      return;
    }
    for (std::size_t q = 0; q < rule.bary.size(); ++q) {
      const auto& l = rule.bary[q];
      std::array<double, 3> bary;
      for (int k = 0; k < 3; ++k)
        bary[size_t(k)] = l[0] * c0[size_t(k)] + l[1] * c1[size_t(k)] + l[2] * c2[size_t(k)];
      const Vec2 x = bary[0] * p0 + bary[1] * p1 + bary[2] * p2;
      visit(x, rule.weights[q] * area * frac, bary);
    }
  };

  const int refine = subdiv ? subdiv->refine : 0;
  if (subdiv == nullptr || subdiv->depth <= 0) {
    run_cell(run_cell, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, 1.0, refine);
    return;
  }

  // Layers shrink geometrically toward vertex 0. Layer k spans the strip
  // between scale t_hi and t_lo = ratio * t_hi; it splits into two
  // triangles, each a fixed fraction of the original area.
  double t_hi = 1.0;
  for (int k = 0; k < subdiv->depth; ++k) {
    const double t_lo = subdiv->ratio * t_hi;
    const std::array<double, 3> a1 = {1.0 - t_lo, t_lo, 0.0};
    const std::array<double, 3> b1 = {1.0 - t_hi, t_hi, 0.0};
    const std::array<double, 3> b2 = {1.0 - t_hi, 0.0, t_hi};
    const std::array<double, 3> a2 = {1.0 - t_lo, 0.0, t_lo};
    run_cell(run_cell, a1, b1, b2, t_hi * (t_hi - t_lo), refine);
    run_cell(run_cell, a1, b2, a2, t_lo * (t_hi - t_lo), refine);
    t_hi = t_lo;
  }
  run_cell(run_cell, {1, 0, 0}, {1.0 - t_hi, t_hi, 0.0}, {1.0 - t_hi, 0.0, t_hi},
           t_hi * t_hi, refine);
}

double integrate_triangle(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                          const std::function<double(const Vec2&)>& f, const TriRule& rule) {
  double s = 0.0;
  for_each_tri_point(p0, p1, p2, rule, nullptr,
                     [&](const Vec2& x, double w, const std::array<double, 3>&) { s += w * f(x); });
  return s;
}

double integrate_triangle_corner_adapted(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                                         const std::function<double(const Vec2&)>& f,
                                         const TriRule& rule, int depth, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("subdivision ratio must be in (0,1)");
  CornerSubdivision s{depth, ratio};
  double acc = 0.0;
  for_each_tri_point(p0, p1, p2, rule, &s,
                     [&](const Vec2& x, double w, const std::array<double, 3>&) { acc += w * f(x); });
  return acc;
}

double integrate_edge(const Vec2& a, const Vec2& b,
                      const std::function<double(const Vec2&)>& f, const EdgeRule& rule) {
  const double len = (b - a).norm();
  double s = 0.0;
  for (std::size_t q = 0; q < rule.t.size(); ++q) {
    const Vec2 x = a + rule.t[q] * (b - a);
    s += rule.weights[q] * f(x);
  }
  return s * len;
}

}  // namespace ncfem
