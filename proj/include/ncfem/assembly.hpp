// P1 finite element assembly of the state operator, mass matrices and load
// vectors. Element loops run either as an OpenMP two-phase kernel
// (parallel local computation, serial merge in element order, so the
// result is identical for any thread count) or as a plain serial loop kept
// as the reference implementation.
#pragma once

#include "ncfem/coeffs.hpp"
#include "ncfem/mesh.hpp"
#include "ncfem/quadrature.hpp"

#include <Eigen/Sparse>

namespace ncfem {

struct AssemblyOptions {
  int tri_degree = 4;                ///< 4 (6-point) or 8 (16-point) triangle rule
  int edge_degree = 7;               ///< 7 (4-point) or 15 (8-point) edge Gauss
  CornerSubdivision corner{12, 0.25};///< composite rule near singular coefficient points
  bool parallel = true;              ///< OpenMP two-phase kernel; false = serial reference
};

/// Boundary mass coupling between per-edge constants and nodal hat
/// functions: for edge E with endpoints (i1, i2) both nodal integrals
/// int_E phi equal h_E / 2. Also carries the edge-lumped L2(Gamma) metric
/// diag(h_E) used for control inner products.
struct BoundaryMass {
  std::vector<std::array<int, 2>> edge_nodes;
  Eigen::VectorXd h;
  int n = 0;  ///< number of mesh nodes

  int num_edges() const { return static_cast<int>(edge_nodes.size()); }

  /// Nodal load of a piecewise-constant boundary density: (result)_i =
  /// sum_E u_E int_E phi_i.
  Eigen::VectorXd apply(const Eigen::VectorXd& u_edge) const;

  /// Per-edge means (1/h_E) int_E v_h of a P1 nodal field.
  Eigen::VectorXd edge_average(const Eigen::VectorXd& nodal) const;

  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double norm(const Eigen::VectorXd& u) const;
};

struct AssembledSystem {
  Eigen::SparseMatrix<double> K;        ///< K_ij = a(phi_j, phi_i): trial j, test i
  Eigen::SparseMatrix<double> M_omega;  ///< domain mass matrix
  BoundaryMass gamma;
  Eigen::VectorXd load_f;  ///< optional data load, filled by problem setup
  Eigen::VectorXd load_g;  ///< optional boundary data load
  int n = 0;
};

/// Assembles the state operator and the domain mass matrix. Elements with
/// a vertex at a singular coefficient point use the corner-adapted
/// composite rule; all others the plain symmetric rule.
AssembledSystem assemble_state(const TriMesh& mesh, const CoefficientSet& coeffs,
                               const AssemblyOptions& opts = {});

/// Directly assembled adjoint operator (integration-by-parts form with
/// -div(b), -b.grad and the b.n boundary term). Cross-check only: the
/// discrete adjoint used by solvers is K^T.
Eigen::SparseMatrix<double> assemble_adjoint_direct(const TriMesh& mesh,
                                                    const CoefficientSet& coeffs,
                                                    const AssemblyOptions& opts = {});

BoundaryMass assemble_boundary_mass(const TriMesh& mesh);

/// Load vector int_Omega f phi_i. Elements touching a singular point use
/// the composite rule.
Eigen::VectorXd assemble_domain_load(const TriMesh& mesh, const ScalarField& f,
                                     const std::vector<Vec2>& singular_points,
                                     const AssemblyOptions& opts = {});

/// Load vector int_Gamma g phi_i, with g evaluated against the outward
/// normal of each boundary edge.
Eigen::VectorXd assemble_boundary_load(const TriMesh& mesh, const BoundaryField& g,
                                       const AssemblyOptions& opts = {});

/// Matrix dump in coordinate text format: header "n nnz", then one
/// "i j value" line per stored entry (0-based).
void write_matrix_dump(const Eigen::SparseMatrix<double>& A, std::ostream& os);

/// Local node indices of mesh triangles whose vertex coincides with a
/// singular point (-1 when none). Exposed for the error-norm code.
std::vector<int> singular_vertex_of_tris(const TriMesh& mesh,
                                         const std::vector<Vec2>& singular_points);

}  // namespace ncfem
