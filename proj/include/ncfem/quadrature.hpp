// Quadrature rules on triangles and edges, including a composite rule with
// geometric refinement toward one vertex for radially singular integrands.
#pragma once

#include "ncfem/domain.hpp"

#include <array>
#include <functional>
#include <vector>

namespace ncfem {

/// Symmetric rule on the reference triangle; weights sum to one (scale by
/// the physical triangle area).
struct TriRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
  int degree = 0;
};

/// Rule on the unit interval; weights sum to one.
struct EdgeRule {
  std::vector<double> t;
  std::vector<double> weights;
  int degree = 0;
};

/// Degree-4 (6 points) or degree-8 (16 points) symmetric triangle rule.
const TriRule& tri_rule(int degree);

/// Gauss-Legendre on an edge: degree 7 (4 points) or degree 15 (8 points).
const EdgeRule& edge_rule(int degree);

/// Geometric subdivision of a triangle toward vertex 0: `depth` layers
/// shrinking by `ratio` toward the singular vertex plus the innermost cap,
/// with the base rule applied on each cell. depth = 0 reproduces the plain
/// rule. `refine` red-refines every subcell that many times (4^refine
/// similar cells), which lowers the per-layer truncation floor when high
/// absolute accuracy is required.
struct CornerSubdivision {
  int depth = 12;
  double ratio = 0.25;
  int refine = 0;
};

/// Visits every quadrature point of the (possibly composite) rule on the
/// physical triangle (p0, p1, p2). The singular vertex, when subdividing,
/// is p0. Callback receives the physical point, the weight (scaled by
/// physical area) and the barycentric coordinates with respect to
/// (p0, p1, p2).
void for_each_tri_point(
    const Vec2& p0, const Vec2& p1, const Vec2& p2, const TriRule& rule,
    const CornerSubdivision* subdiv,
    const std::function<void(const Vec2&, double, const std::array<double, 3>&)>& visit);

double integrate_triangle(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                          const std::function<double(const Vec2&)>& f, const TriRule& rule);

/// Composite integration with geometric refinement toward p0.
double integrate_triangle_corner_adapted(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                                         const std::function<double(const Vec2&)>& f,
                                         const TriRule& rule, int depth, double ratio);

/// Integrates f over the segment [a, b] (arc-length measure).
double integrate_edge(const Vec2& a, const Vec2& b,
                      const std::function<double(const Vec2&)>& f, const EdgeRule& rule);

}  // namespace ncfem
