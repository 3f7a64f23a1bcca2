#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace pudwr {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Linear solve failure; carries the relative residual reached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (relative residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct SolverSettings {
  enum class Kind { automatic, direct, iterative };
  Kind kind = Kind::automatic;
  /// `automatic` falls back to sparse LU when the Krylov solvers fail, but
  /// only up to this many unknowns.
  Eigen::Index direct_limit = 200000;
  double rtol = 1e-10;
  int max_iterations = 1000;
  /// Incomplete LUT fallback.
  double ilu_drop_tol = 1e-4;
  int ilu_fill = 10;
  /// A reused ILU(0) factor is rebuilt once a solve needs more sweeps.
  int refresh_iterations = 12;
  /// Number of contiguous component blocks of the unknown vector; the
  /// incomplete factor is computed in node-interleaved order.
  int components = 2;
};

/// BiCGSTAB preconditioned by ILU(0). The factor is kept across calls while
/// it stays effective (successive Newton and time-step matrices differ
/// little); incomplete LUT and sparse LU are the fallbacks.
class LinearSolver {
 public:
  explicit LinearSolver(SolverSettings settings = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Solves A x = b to the relative residual `rtol` (settings value when
  /// not positive), starting the Krylov iteration from `guess` if given.
  /// Throws SolverError when the tolerance is not reached.
  Eigen::VectorXd solve(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol = 0.0,
                        const Eigen::VectorXd* guess = nullptr);
  /// Solves A^T x = b.
  Eigen::VectorXd solve_transpose(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol = 0.0,
                                  const Eigen::VectorXd* guess = nullptr);

  const SolverSettings& settings() const { return settings_; }
  int factorizations() const { return factorizations_; }
  int last_iterations() const { return last_iterations_; }

 private:
  struct Factor;
  struct Reorder;
  Eigen::VectorXd iterate(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol, const Eigen::VectorXd* guess);
  Eigen::VectorXd direct(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol);

  SolverSettings settings_;
  std::unique_ptr<Factor> factor_;
  std::unique_ptr<Reorder> reorder_;
  int factorizations_ = 0;
  int last_iterations_ = 0;
};

/// One-shot solves of A x = b and A^T x = b.
Eigen::VectorXd solve(const SparseMatrix& a, const Eigen::VectorXd& b, const SolverSettings& settings = {});
Eigen::VectorXd solve_transpose(const SparseMatrix& a, const Eigen::VectorXd& b,
                                const SolverSettings& settings = {});

}  // namespace pudwr
