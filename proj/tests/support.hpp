// Shared test helpers.
#pragma once

#include "ncfem/analysis.hpp"

namespace ncfem::testsupport {

/// Assembles the full discrete control problem for the manufactured case.
inline OcpProblem make_problem(const TriMesh& mesh, const ManufacturedCase& mc,
                               ControlBounds bounds = {}, const AssemblyOptions& opts = {},
                               const LinearSolveConfig& solver_cfg = {}) {
  AssembledSystem sys = assemble_state(mesh, mc.coeffs, opts);
  Eigen::VectorXd load_state =
      assemble_domain_load(mesh, mc.f, mc.coeffs.singular_points, opts) +
      assemble_boundary_load(mesh, mc.g_y, opts);
  Eigen::VectorXd load_yd =
      assemble_domain_load(mesh, mc.y_d, mc.coeffs.singular_points, opts);
  Eigen::VectorXd load_gphi = assemble_boundary_load(mesh, mc.g_phi, opts);
  const double yd_sq = integrate_domain(
      mesh,
      [&](const Vec2& x) {
        const double v = mc.y_d(x);
        return v * v;
      },
      mc.coeffs.singular_points, opts);
  return OcpProblem(std::move(sys), mc.nu, bounds, std::move(load_state), std::move(load_yd),
                    yd_sq, std::move(load_gphi), solver_cfg);
}

}  // namespace ncfem::testsupport
