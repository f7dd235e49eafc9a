// Polygonal domain description: vertex loop, corner angles, singular
// exponents and per-corner grading parameters.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ncfem {

using Vec2 = Eigen::Vector2d;

/// Per-vertex corner data.
struct CornerData {
  double omega = 0.0;   ///< interior angle in radians, in (0, 2*pi)
  double lambda = 0.0;  ///< leading singular exponent of the corner operator
  double mu = 1.0;      ///< mesh grading parameter, in (0, 1]
  double beta = 0.0;    ///< weight metadata in [0, 1); never read by solvers
};

/// Simple polygon with positive orientation. Side j connects vertex j to
/// vertex (j+1) mod m; corner j sits between sides j-1 and j. Immutable
/// after construction and safe to share across threads.
class PolygonDomain {
 public:
  PolygonDomain(std::vector<Vec2> vertices, std::vector<CornerData> corners);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_sides() const { return num_vertices(); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(int j) const { return vertices_[static_cast<size_t>(j)]; }
  const std::vector<CornerData>& corners() const { return corners_; }
  const CornerData& corner(int j) const { return corners_[static_cast<size_t>(j)]; }

  /// Unit tangent of side j, pointing from vertex j to vertex j+1.
  Vec2 side_tangent(int j) const;
  /// Outward unit normal of side j.
  Vec2 side_normal(int j) const;
  double side_length(int j) const;

  double signed_area() const;
  double perimeter() const;

  /// Smallest corner exponent min_j lambda_j.
  double lambda_min() const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<CornerData> corners_;
};

/// Interior angle at vertex j computed from the two adjacent edge
/// directions, measured counterclockwise, in (0, 2*pi).
double interior_angle(const std::vector<Vec2>& vertices, int j);

/// Builds a polygon from a counterclockwise vertex list. Angles are computed
/// from the geometry, lambda_j = pi/omega_j (identity diffusion), and the
/// optional grading list sets mu_j (scalar broadcast or one value per
/// vertex). Throws std::invalid_argument on degenerate or self-intersecting
/// input.
PolygonDomain make_polygon(std::vector<Vec2> vertices,
                           const std::vector<double>& mu = {});

/// L-shaped domain (-1,1)^2 minus the closed fourth quadrant, with the
/// reentrant corner at the origin as vertex 0. omega_0 = 3*pi/2 and
/// lambda_0 = 2/3; the five convex corners have omega = pi/2, lambda = 2.
PolygonDomain make_lshape();

/// Unit square (0,1)^2.
PolygonDomain make_unit_square();

/// Named preset lookup ("lshape", "unit-square"). Throws on unknown names.
PolygonDomain domain_preset(const std::string& name);

/// Leading singular exponent of the corner operator with constant
/// coefficient matrix a_corner at a corner of opening omega.
///
/// The cone is taken symmetric about the positive x-axis (rays at
/// +-omega/2); the affine map x -> a_corner^{-1/2} x turns the operator
/// into the Laplacian, and the exponent is pi over the mapped opening.
/// For identity a this is exactly pi/omega. Invariant under scaling of
/// a_corner. Throws std::invalid_argument unless a_corner is symmetric
/// positive definite.
double singular_exponent(const CornerData& corner,
                         const Eigen::Matrix2d& a_corner);

/// Same, with explicit edge tangents (unit vectors from the corner along
/// the two adjacent sides; the interior lies counterclockwise from t_out
/// to t_in).
double singular_exponent_with_tangents(const Vec2& t_out, const Vec2& t_in,
                                       const Eigen::Matrix2d& a_corner);

}  // namespace ncfem
