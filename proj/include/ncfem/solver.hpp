// Sparse non-symmetric linear solves K x = r and K^T x = r. Default is a
// direct factorization shared by both solve directions; a GMRES/ILU path
// exists as a config option for larger runs.
#pragma once

#include <Eigen/Sparse>

#include <memory>
#include <stdexcept>
#include <string>

namespace ncfem {

/// Raised when a solve or eigeniteration fails numerically (as opposed to
/// bad configuration input).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct LinearSolveConfig {
  enum class Method { Direct, Iterative };
  Method method = Method::Direct;
  double tol = 1e-10;   ///< relative residual bound checked after every solve
  int max_iter = 2000;  ///< iterative path only
};

struct SolveDiagnostics {
  double residual = 0.0;  ///< achieved relative residual
  int iterations = 0;     ///< 0 for direct solves
  double fill_nnz = 0.0;  ///< factor nonzeros (direct path)
  double seconds = 0.0;
};

/// Factorization (or iterative context) for one operator, reusable for
/// both K and K^T solves. Immutable after construction; concurrent solves
/// from multiple threads are safe on the direct path.
class LinearOperatorSolver {
 public:
  LinearOperatorSolver(const Eigen::SparseMatrix<double>& K, const LinearSolveConfig& cfg = {});
  ~LinearOperatorSolver();

  LinearOperatorSolver(LinearOperatorSolver&&) noexcept;
  LinearOperatorSolver& operator=(LinearOperatorSolver&&) noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, SolveDiagnostics* diag = nullptr) const;
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& rhs,
                                   SolveDiagnostics* diag = nullptr) const;

  int dimension() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrappers.
std::pair<Eigen::VectorXd, SolveDiagnostics> solve(const Eigen::SparseMatrix<double>& K,
                                                   const Eigen::VectorXd& rhs,
                                                   const LinearSolveConfig& cfg = {});
std::pair<Eigen::VectorXd, SolveDiagnostics> solve_transposed(
    const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
    const LinearSolveConfig& cfg = {});

}  // namespace ncfem
