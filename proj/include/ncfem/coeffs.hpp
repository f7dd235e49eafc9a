// PDE coefficient fields and the manufactured L-shape test case: a corner
// singularity r^lambda * cos(lambda*theta) driven by radially singular
// convection/reaction coefficients.
#pragma once

#include "ncfem/domain.hpp"

#include <functional>
#include <vector>

namespace ncfem {

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;
using MatrixField = std::function<Eigen::Matrix2d(const Vec2&)>;
/// Boundary datum evaluated at a point with the outward unit normal there.
using BoundaryField = std::function<double(const Vec2&, const Vec2&)>;

/// Coefficients of the operator  -div(a grad y) + b . grad y + a0 y.
/// All fields are pure functions of position and safe to evaluate
/// concurrently. singular_points lists locations where coefficients blow
/// up; quadrature near them switches to the corner-adapted composite rule.
struct CoefficientSet {
  MatrixField a;
  VectorField b;
  ScalarField a0;
  ScalarField div_b;
  std::vector<Vec2> singular_points;

  bool has_convection = true;

  double b_dot_n(const Vec2& x, const Vec2& n) const { return b(x).dot(n); }
};

/// a = I, b = 0, a0 = 0 (pure Neumann diffusion).
CoefficientSet laplace_coefficients();

/// a = I, b = 0, a0 = const > 0 (coercive reference operator).
CoefficientSet reaction_coefficients(double a0);

/// Polar angle measured from the positive x-axis with branch cut along
/// that axis, range [0, 2*pi). On the L-shape this is continuous on the
/// closed domain minus the origin. Throws std::domain_error at the origin.
double theta_branch(const Vec2& x);

/// Manufactured optimal-control case on the L-shape. Exact state
/// y = r^lambda cos(lambda theta), adjoint phi = -y, control u = -phi/nu on
/// the boundary; convection b = delta r^(alpha+1) (cos theta, sin theta)
/// and reaction a0 = r^alpha. All data fields are closed forms in (r,
/// theta).
struct ManufacturedCase {
  double delta = 6.0;
  double alpha = -1.25;
  double nu = 1.0;
  double lambda = 2.0 / 3.0;

  CoefficientSet coeffs;

  ScalarField exact_y;
  ScalarField exact_phi;
  VectorField grad_y;    // singular at the origin; throws there
  VectorField grad_phi;
  ScalarField exact_u;   // trace datum -phi/nu = y/nu

  ScalarField f;            // b . grad y + a0 y
  ScalarField y_d;          // y + div(phi b) - a0 phi
  ScalarField y_minus_yd;   // closed form, avoids cancellation
  BoundaryField g_y;    // dn y - u
  BoundaryField g_phi;  // dn phi + (b phi) . n
  BoundaryField dn_y;   // conormal derivative of the exact state
};

/// Builds the manufactured case. Requires alpha > -3/2, nu > 0, delta >= 0.
ManufacturedCase make_example(double delta, double alpha, double nu);

/// Gradient of the exact state at x (polar chain rule). Throws at the
/// origin, where the gradient is singular.
Vec2 eval_exact_gradient(const ManufacturedCase& mc, const Vec2& x);

}  // namespace ncfem
