// Discretized boundary control problem: piecewise-constant controls on the
// boundary segmentation, tracking objective with Tikhonov term, gradient
// via the discrete adjoint K^T, box constraints by primal-dual active set.
#pragma once

#include "ncfem/assembly.hpp"
#include "ncfem/solver.hpp"

#include <limits>
#include <string>
#include <vector>

namespace ncfem {

/// One value per boundary edge, indexed like TriMesh::boundary.
using ControlVector = Eigen::VectorXd;

struct ControlBounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool finite() const { return std::isfinite(lo) || std::isfinite(hi); }
  double clamp(double v) const { return std::min(std::max(v, lo), hi); }
};

struct OcpConfig {
  double opt_tol = 1e-9;         ///< per-edge projection-formula residual
  int max_cg_iter = 200;         ///< reduced-Hessian CG applications
  int max_active_set_iter = 50;  ///< outer active-set sweeps before falling back
  int max_pg_iter = 2000;        ///< projected-gradient fallback cap
};

/// Assembled control problem. Holds the state operator factorization (one
/// factorization serves both K and K^T solves), mass matrices and the
/// fixed data loads; the objective is an exact quadratic in the control.
class OcpProblem {
 public:
  OcpProblem(AssembledSystem sys, double nu, ControlBounds bounds,
             Eigen::VectorXd load_state, Eigen::VectorXd load_yd, double yd_sq,
             Eigen::VectorXd load_gphi, const LinearSolveConfig& solver_cfg = {});

  int num_controls() const { return sys_.gamma.num_edges(); }
  double nu() const { return nu_; }
  const ControlBounds& bounds() const { return bounds_; }
  const AssembledSystem& system() const { return sys_; }
  const BoundaryMass& gamma() const { return sys_.gamma; }
  const LinearOperatorSolver& solver() const { return solver_; }

  /// K y = load_state + M_gamma u.
  Eigen::VectorXd solve_state(const ControlVector& u) const;
  /// K^T phi = M_omega y - load_yd + load_gphi.
  Eigen::VectorXd solve_adjoint(const Eigen::VectorXd& y) const;
  /// Reduced Hessian application nu*v + S*(S v) in the edge-lumped metric.
  ControlVector hessian_apply(const ControlVector& v) const;

  double objective_from_state(const ControlVector& u, const Eigen::VectorXd& y) const;
  /// Per-edge residual of the projection formula for the pair (u, phi).
  double projection_residual(const ControlVector& u, const Eigen::VectorXd& phi) const;

 private:
  AssembledSystem sys_;
  double nu_;
  ControlBounds bounds_;
  Eigen::VectorXd load_state_, load_yd_, load_gphi_;
  double yd_sq_;
  LinearOperatorSolver solver_;
};

struct OcpSolution {
  ControlVector u;
  Eigen::VectorXd y;
  Eigen::VectorXd phi;
  double objective = 0.0;
  double opt_residual = 0.0;
  int iterations = 0;
  std::string method;  ///< "reduced_cg", "active_set" or "projected_gradient"
};

double objective(const OcpProblem& p, const ControlVector& u);
ControlVector gradient(const OcpProblem& p, const ControlVector& u);

/// Edge-averaging projection onto piecewise constants: per-edge means of a
/// boundary scalar field.
ControlVector project_Qh(const ScalarField& u_exact, const TriMesh& mesh, int edge_degree = 7);

/// Solves the problem without bounds via conjugate gradients on the
/// reduced Hessian. Throws NumericalError (with residual history) on
/// non-convergence.
OcpSolution solve_unconstrained(const OcpProblem& p, const OcpConfig& cfg = {});

/// Box-constrained solve: primal-dual active set, with a monotone
/// projected-gradient fallback if the active set cycles. The solution
/// method actually used is recorded in OcpSolution::method.
OcpSolution solve_box(const OcpProblem& p, const OcpConfig& cfg = {});

/// Projected gradient with Armijo backtracking (the solve_box fallback,
/// exposed for direct use). Appends the objective value of every accepted
/// iterate to *history when given.
OcpSolution solve_projected_gradient(const OcpProblem& p, const OcpConfig& cfg,
                                     ControlVector u0, std::vector<double>* history = nullptr);

}  // namespace ncfem
