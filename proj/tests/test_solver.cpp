#include "ncfem/solver.hpp"

#include "ncfem/analysis.hpp"

#include <doctest.h>

#include <random>

using namespace ncfem;

namespace {

Eigen::SparseMatrix<double> sparse_from_dense(const Eigen::MatrixXd& A) {
  Eigen::SparseMatrix<double> S(A.rows(), A.cols());
  for (int j = 0; j < A.cols(); ++j)
    for (int i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) S.insert(i, j) = A(i, j);
  S.makeCompressed();
  return S;
}

// plain Gaussian elimination with partial pivoting, the dense oracle
Eigen::VectorXd dense_gauss_solve(Eigen::MatrixXd A, Eigen::VectorXd b) {
  const int n = static_cast<int>(A.rows());
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A(i, k)) > std::abs(A(p, k))) p = i;
    A.row(k).swap(A.row(p));
    std::swap(b[k], b[p]);
    for (int i = k + 1; i < n; ++i) {
      const double f = A(i, k) / A(k, k);
      A.row(i).tail(n - k) -= f * A.row(k).tail(n - k);
      b[i] -= f * b[k];
    }
  }
  Eigen::VectorXd x(n);
  for (int i = n - 1; i >= 0; --i)
    x[i] = (b[i] - A.row(i).tail(n - 1 - i).dot(x.tail(n - 1 - i))) / A(i, i);
  return x;
}

}  // namespace

TEST_CASE("identity and triangular systems") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd r(4);
  r << 1, -2, 3, 0.5;
  const auto [x, diag] = solve(sparse_from_dense(I), r);
  CHECK((x - r).norm() == 0.0);
  CHECK(diag.residual <= 1e-10);

  Eigen::MatrixXd T(2, 2);
  T << 2, 1, 0, 1;
  Eigen::VectorXd b(2);
  b << 3, 1;
  const auto [y, d2] = solve(sparse_from_dense(T), b);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("transposed solve reuses the factorization") {
  std::mt19937 rng(3u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd A(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) A(i, j) = unif(rng);
  A += 5.0 * Eigen::MatrixXd::Identity(5, 5);  // safely nonsingular
  Eigen::VectorXd r(5);
  for (int i = 0; i < 5; ++i) r[i] = unif(rng);

  const Eigen::SparseMatrix<double> S = sparse_from_dense(A);
  LinearOperatorSolver shared(S);
  const Eigen::VectorXd x1 = shared.solve_transposed(r);

  // explicit-transpose route
  const Eigen::SparseMatrix<double> ST = sparse_from_dense(A.transpose());
  LinearOperatorSolver explicit_t(ST);
  const Eigen::VectorXd x2 = explicit_t.solve(r);
  CHECK((x1 - x2).lpNorm<Eigen::Infinity>() <= 1e-12 * x2.lpNorm<Eigen::Infinity>());

  // dense oracle
  const Eigen::VectorXd x3 = dense_gauss_solve(A.transpose(), r);
  CHECK((x1 - x3).lpNorm<Eigen::Infinity>() <= 1e-11 * x3.lpNorm<Eigen::Infinity>());

  // symmetric matrix: both solve directions coincide
  Eigen::MatrixXd Sym = A + A.transpose();
  Sym += 10.0 * Eigen::MatrixXd::Identity(5, 5);
  LinearOperatorSolver sym(sparse_from_dense(Sym));
  CHECK((sym.solve(r) - sym.solve_transposed(r)).norm() <= 1e-12);
}

TEST_CASE("assembled coercive system solves to tolerance") {
  const PolygonDomain dom = make_lshape();
  const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::uniform(dom));
  const AssembledSystem sys = assemble_state(mesh, reaction_coefficients(1.0));
  const Eigen::VectorXd rhs =
      assemble_domain_load(mesh, [](const Vec2& x) { return x.x() + 2.0; }, {});
  SolveDiagnostics diag;
  LinearOperatorSolver s(sys.K);
  const Eigen::VectorXd y = s.solve(rhs, &diag);
  CHECK(diag.residual <= 1e-10);
  // round trip: multiplying back reproduces the load
  CHECK((sys.K * y - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("Galerkin residual of the discrete state solve") {
  const PolygonDomain dom = make_lshape();
  const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::uniform(dom));
  const ManufacturedCase mc = make_example(6.0, -1.25, 1.0);
  const AssembledSystem sys = assemble_state(mesh, mc.coeffs);
  const Eigen::VectorXd rhs =
      assemble_domain_load(mesh, mc.f, mc.coeffs.singular_points) +
      assemble_boundary_load(mesh, mc.dn_y);
  LinearOperatorSolver s(sys.K);
  const Eigen::VectorXd y = s.solve(rhs);
  // |a(y - y_h, z_h)| = |(K y_h - rhs) . z| <= solver_tol * ||z|| for all z
  const Eigen::VectorXd resid = sys.K * y - rhs;
  CHECK(resid.norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("iterative path matches the direct path") {
  const PolygonDomain dom = make_lshape();
  const TriMesh mesh = build_graded_mesh(dom, 2, GradingSpec::uniform(dom));
  const ManufacturedCase mc = make_example(6.0, -1.25, 1.0);
  const AssembledSystem sys = assemble_state(mesh, mc.coeffs);
  const Eigen::VectorXd rhs = assemble_boundary_load(mesh, mc.dn_y);

  LinearSolveConfig it_cfg;
  it_cfg.method = LinearSolveConfig::Method::Iterative;
  it_cfg.tol = 1e-12;
  it_cfg.max_iter = 2000;

  const auto [xd, dd] = solve(sys.K, rhs);
  SolveDiagnostics di;
  LinearOperatorSolver it_solver(sys.K, it_cfg);
  const Eigen::VectorXd xi = it_solver.solve(rhs, &di);
  CHECK(di.iterations > 0);
  CHECK((xd - xi).lpNorm<Eigen::Infinity>() <= 1e-7 * xd.lpNorm<Eigen::Infinity>());
  const Eigen::VectorXd xit = it_solver.solve_transposed(rhs);
  const Eigen::VectorXd xdt = LinearOperatorSolver(sys.K).solve_transposed(rhs);
  CHECK((xdt - xit).lpNorm<Eigen::Infinity>() <= 1e-7 * xdt.lpNorm<Eigen::Infinity>());
}

TEST_CASE("singular matrix raises a numerical error") {
  Eigen::MatrixXd A(3, 3);
  A << 1, 2, 3, 2, 4, 6, 0, 0, 1;  // rank deficient
  CHECK_THROWS_AS(solve(sparse_from_dense(A), Eigen::VectorXd::Ones(3)), NumericalError);
}
