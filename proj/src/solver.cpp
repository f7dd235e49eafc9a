#include "ncfem/solver.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <chrono>
#include <cstdio>

namespace ncfem {

namespace {
using SpMat = Eigen::SparseMatrix<double>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}
}  // namespace

struct LinearOperatorSolver::Impl {
  LinearSolveConfig cfg;
  SpMat K;
  SpMat KT;  // iterative path only
  Eigen::SparseLU<SpMat> lu;
  std::unique_ptr<Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>>> gmres;
  std::unique_ptr<Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>>> gmres_t;

  Eigen::VectorXd run(const Eigen::VectorXd& rhs, bool transposed, SolveDiagnostics* diag) const {
    const auto t0 = Clock::now();
    Eigen::VectorXd x;
    int iters = 0;
    if (cfg.method == LinearSolveConfig::Method::Direct) {
      // SparseLU::transpose() is declared non-const although the solve
      // only reads the factors.
      auto& lu_view = const_cast<Eigen::SparseLU<SpMat>&>(lu);
      if (transposed)
        x = lu_view.transpose().solve(rhs);
      else
        x = lu.solve(rhs);
    } else {
      const auto& g = transposed ? *gmres_t : *gmres;
      x = g.solve(rhs);
      iters = static_cast<int>(g.iterations());
      if (g.info() != Eigen::Success)
        throw NumericalError("GMRES did not converge within " + std::to_string(cfg.max_iter) +
                             " iterations (residual " + sci(g.error()) + ")");
    }
    const SpMat& A = K;
    const double rhs_norm = rhs.norm();
    const Eigen::VectorXd resid = transposed ? Eigen::VectorXd(A.transpose() * x - rhs)
                                             : Eigen::VectorXd(A * x - rhs);
    const double rel = resid.norm() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
    if (!(rel <= cfg.tol) && rhs_norm > 0.0)
      throw NumericalError("linear solve residual " + sci(rel) + " exceeds tolerance " +
                           sci(cfg.tol) + "; the system of dimension " +
                           std::to_string(A.rows()) +
                           " may be singular to working precision (mesh too coarse for "
                           "unique discrete solvability)");
    if (diag) {
      diag->residual = rel;
      diag->iterations = iters;
      diag->seconds = seconds_since(t0);
    }
    return x;
  }
};

LinearOperatorSolver::LinearOperatorSolver(const SpMat& K, const LinearSolveConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
  if (K.rows() != K.cols()) throw std::invalid_argument("operator matrix must be square");
  impl_->cfg = cfg;
  impl_->K = K;
  impl_->K.makeCompressed();
  if (cfg.method == LinearSolveConfig::Method::Direct) {
    impl_->lu.compute(impl_->K);
    if (impl_->lu.info() != Eigen::Success)
      throw NumericalError("sparse LU factorization failed for dimension " +
                           std::to_string(K.rows()) +
                           ": matrix singular to working precision (mesh may be too coarse "
                           "for unique discrete solvability)");
  } else {
    impl_->KT = SpMat(impl_->K.transpose());
    impl_->gmres = std::make_unique<Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>>>();
    impl_->gmres_t = std::make_unique<Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>>>();
    for (auto* g : {impl_->gmres.get(), impl_->gmres_t.get()}) {
      // run the Krylov iteration a notch below the contract tolerance so
      // the post-solve residual check holds in the plain 2-norm
      g->setTolerance(0.05 * cfg.tol);
      g->setMaxIterations(cfg.max_iter);
    }
    impl_->gmres->compute(impl_->K);
    impl_->gmres_t->compute(impl_->KT);
  }
}

LinearOperatorSolver::~LinearOperatorSolver() = default;
LinearOperatorSolver::LinearOperatorSolver(LinearOperatorSolver&&) noexcept = default;
LinearOperatorSolver& LinearOperatorSolver::operator=(LinearOperatorSolver&&) noexcept = default;

Eigen::VectorXd LinearOperatorSolver::solve(const Eigen::VectorXd& rhs,
                                            SolveDiagnostics* diag) const {
  return impl_->run(rhs, false, diag);
}

Eigen::VectorXd LinearOperatorSolver::solve_transposed(const Eigen::VectorXd& rhs,
                                                       SolveDiagnostics* diag) const {
  return impl_->run(rhs, true, diag);
}

int LinearOperatorSolver::dimension() const { return static_cast<int>(impl_->K.rows()); }

std::pair<Eigen::VectorXd, SolveDiagnostics> solve(const SpMat& K, const Eigen::VectorXd& rhs,
                                                   const LinearSolveConfig& cfg) {
  LinearOperatorSolver s(K, cfg);
  SolveDiagnostics d;
  Eigen::VectorXd x = s.solve(rhs, &d);
  return {std::move(x), d};
}

std::pair<Eigen::VectorXd, SolveDiagnostics> solve_transposed(const SpMat& K,
                                                              const Eigen::VectorXd& rhs,
                                                              const LinearSolveConfig& cfg) {
  LinearOperatorSolver s(K, cfg);
  SolveDiagnostics d;
  Eigen::VectorXd x = s.solve_transposed(rhs, &d);
  return {std::move(x), d};
}

}  // namespace ncfem
