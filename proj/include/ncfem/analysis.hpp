// Error norms against exact fields, experimental orders of convergence,
// the discrete coercivity probe, and the convergence-study driver.
#pragma once

#include "ncfem/ocp.hpp"

#include <iosfwd>
#include <optional>

namespace ncfem {

struct ErrorRecord {
  int level = 0;
  double h = 0.0;
  std::size_t ndof = 0;
  double err_y_L2 = 0.0;
  double err_y_H1 = 0.0;
  double err_phi_L2 = 0.0;
  double err_phi_H1 = 0.0;
  double err_u_L2G = 0.0;
};

struct ExpectedOrders {
  double y_l2 = 2.0, y_h1 = 1.0, phi_l2 = 2.0, phi_h1 = 1.0, u_l2 = 1.0;
};

struct EocTable {
  std::vector<ErrorRecord> rows;
  ExpectedOrders expected;
  bool has_ocp = true;

  static double eoc(double e_prev, double e_cur) { return std::log2(e_prev / e_cur); }

  /// Mean EOC of the `pairs` finest consecutive level pairs of one column.
  double tail_mean_eoc(double ErrorRecord::* col, int pairs = 2) const;
};

/// Orders predicted by the grading: s = min_j min(1, lambda_j / mu_j),
/// L2 orders 2s, H1 orders s, control order min(1, 3s/2).
ExpectedOrders expected_orders(const PolygonDomain& dom, const GradingSpec& grading);

/// || v_h - exact ||_L2(Omega) of a P1 nodal field against an exact field.
/// Elements touching a singular point are integrated with the composite
/// corner rule.
double error_L2_domain(const TriMesh& mesh, const Eigen::VectorXd& nodal,
                       const ScalarField& exact, const std::vector<Vec2>& singular_points,
                       const AssemblyOptions& opts = {});

/// Full H1 norm of the error (L2 part plus gradient part).
double error_H1_domain(const TriMesh& mesh, const Eigen::VectorXd& nodal,
                       const ScalarField& exact, const VectorField& grad_exact,
                       const std::vector<Vec2>& singular_points,
                       const AssemblyOptions& opts = {});

/// || u_h - exact ||_L2(Gamma) of a piecewise-constant boundary control.
double error_L2_boundary(const TriMesh& mesh, const ControlVector& u,
                         const ScalarField& exact, int edge_degree = 7);

/// Integral of a scalar field over the meshed domain (corner-adapted near
/// singular points).
double integrate_domain(const TriMesh& mesh, const ScalarField& f,
                        const std::vector<Vec2>& singular_points,
                        const AssemblyOptions& opts = {});

/// Smallest generalized eigenvalue of (K + K^T)/2 x = lambda M_h1 x via
/// shifted inverse power iteration (the shift is located below the
/// spectrum bottom by LDL^T inertia counts). A negative value certifies
/// that the discrete bilinear form is not coercive in the metric M_h1.
double coercivity_probe(const Eigen::SparseMatrix<double>& K,
                        const Eigen::SparseMatrix<double>& M_h1, double tol = 1e-9,
                        int max_iter = 400);

struct StudyConfig {
  PolygonDomain domain;
  GradingSpec grading;
  int level_min = 1;
  int level_max = 7;
  double delta = 6.0;
  double alpha = -1.25;
  double nu = 1.0;
  ControlBounds bounds;
  LinearSolveConfig solver;
  OcpConfig ocp;
  AssemblyOptions quad;
  bool with_ocp = true;
  bool verbose = false;

  explicit StudyConfig(PolygonDomain dom)
      : domain(std::move(dom)), grading(GradingSpec::uniform(domain)) {}
};

/// For every level: solves the boundary value problem pair (state with the
/// exact control as datum; adjoint with the exact state in the source) and
/// the full control problem, and records the five error columns.
/// Numerical failures are rethrown with the level attached.
EocTable run_convergence_study(const StudyConfig& cfg);

/// CSV: one row per level with interleaved EOC columns (empty on the first
/// row), then a final "# expected" comment row. Byte-stable for a fixed
/// config.
void write_csv(const EocTable& table, std::ostream& os);

/// Console table mirroring the usual convergence-table layout.
void print_table(const EocTable& table, std::ostream& os);

}  // namespace ncfem
