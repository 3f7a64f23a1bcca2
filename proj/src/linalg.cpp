#include "pudwr/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <vector>

namespace pudwr {

namespace {

double relative_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double r = (b - a * x).norm();
  return nb > 0 ? r / nb : r;
}

// Zero fill-in incomplete LU on the pattern of A (unit lower factor stored
// below the diagonal, upper factor on and above it).
class Ilu0 {
 public:
  bool compute(const SparseMatrix& a) {
    lu_ = a;
    lu_.makeCompressed();
    const auto n = static_cast<int>(lu_.rows());
    const int* o = lu_.outerIndexPtr();
    const int* c = lu_.innerIndexPtr();
    double* v = lu_.valuePtr();
    diag_.assign(n, -1);
    std::vector<int> pos(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int p = o[i]; p < o[i + 1]; ++p) {
        pos[c[p]] = p;
        if (c[p] == i) diag_[i] = p;
      }
      if (diag_[i] < 0) return false;
      for (int p = o[i]; p < o[i + 1] && c[p] < i; ++p) {
        const int k = c[p];
        const double l = v[p] /= v[diag_[k]];
        for (int q = diag_[k] + 1; q < o[k + 1]; ++q)
          if (const int t = pos[c[q]]; t >= 0) v[t] -= l * v[q];
      }
      for (int p = o[i]; p < o[i + 1]; ++p) pos[c[p]] = -1;
      if (!(std::abs(v[diag_[i]]) > 0) || !std::isfinite(v[diag_[i]])) return false;
    }
    return true;
  }

  template <class Rhs>
  Eigen::VectorXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    const auto n = static_cast<int>(lu_.rows());
    const int* o = lu_.outerIndexPtr();
    const int* c = lu_.innerIndexPtr();
    const double* v = lu_.valuePtr();
    Eigen::VectorXd x = b;
    for (int i = 0; i < n; ++i) {
      double s = x[i];
      for (int p = o[i]; p < diag_[i]; ++p) s -= v[p] * x[c[p]];
      x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (int p = diag_[i] + 1; p < o[i + 1]; ++p) s -= v[p] * x[c[p]];
      x[i] = s / v[diag_[i]];
    }
    return x;
  }

 private:
  SparseMatrix lu_;
  std::vector<int> diag_;
};

// Preconditioner adaptor around a factor owned elsewhere, so the Krylov
// solver does not recompute it on every call.
template <class Factor>
class Borrowed {
 public:
  using StorageIndex = int;
  Borrowed() = default;
  template <class M>
  explicit Borrowed(const M&) {}
  template <class M>
  Borrowed& analyzePattern(const M&) { return *this; }
  template <class M>
  Borrowed& factorize(const M&) { return *this; }
  template <class M>
  Borrowed& compute(const M&) { return *this; }
  template <class Rhs>
  Eigen::VectorXd solve(const Eigen::MatrixBase<Rhs>& b) const { return factor->solve(b); }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

  const Factor* factor = nullptr;
};

template <class Factor>
Eigen::VectorXd bicgstab(const Factor& f, const SparseMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd* x0,
                         double rtol, int max_iterations, double& res, int& iterations) {
  Eigen::BiCGSTAB<SparseMatrix, Borrowed<Factor>> solver;
  solver.preconditioner().factor = &f;
  solver.setTolerance(rtol);
  solver.setMaxIterations(max_iterations);
  solver.compute(a);
  Eigen::VectorXd x = x0 ? Eigen::VectorXd(solver.solveWithGuess(b, *x0)) : Eigen::VectorXd(solver.solve(b));
  res = relative_residual(a, x, b);
  iterations = static_cast<int>(solver.iterations());
  return x;
}

// Reordering of a matrix whose unknowns come as `components` contiguous
// blocks into node-interleaved order, which keeps the strongly coupled
// components of one node next to each other for the incomplete factor.
class Interleave {
 public:
  bool matches(const SparseMatrix& a) const {
    return a.rows() == n_ && a.nonZeros() == static_cast<Eigen::Index>(map_.size()) &&
           std::equal(outer_.begin(), outer_.end(), a.outerIndexPtr()) &&
           std::equal(inner_.begin(), inner_.end(), a.innerIndexPtr());
  }

  void build(const SparseMatrix& a, int components) {
    n_ = a.rows();
    c_ = components;
    const auto n = static_cast<int>(n_);
    const int* o = a.outerIndexPtr();
    const int* in = a.innerIndexPtr();
    outer_.assign(o, o + n + 1);
    inner_.assign(in, in + a.nonZeros());
    map_.assign(a.nonZeros(), 0);
    permuted_.resize(n_, n_);
    permuted_.resizeNonZeros(a.nonZeros());
    int* po = permuted_.outerIndexPtr();
    int* pi = permuted_.innerIndexPtr();
    std::vector<int> inverse(n);
    for (int i = 0; i < n; ++i) inverse[to_new(i)] = i;
    std::vector<std::pair<int, int>> row;
    int pos = 0;
    for (int r = 0; r < n; ++r) {
      const int old = inverse[r];
      po[r] = pos;
      row.clear();
      for (int p = o[old]; p < o[old + 1]; ++p) row.emplace_back(to_new(in[p]), p);
      std::sort(row.begin(), row.end());
      for (const auto& [col, p] : row) {
        pi[pos] = col;
        map_[p] = pos++;
      }
    }
    po[n] = pos;
  }

  const SparseMatrix& apply(const SparseMatrix& a) {
    const double* v = a.valuePtr();
    double* pv = permuted_.valuePtr();
    for (std::size_t p = 0; p < map_.size(); ++p) pv[map_[p]] = v[p];
    return permuted_;
  }
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(x.size());
    for (int i = 0; i < static_cast<int>(n_); ++i) y[to_new(i)] = x[i];
    return y;
  }
  Eigen::VectorXd backward(const Eigen::VectorXd& y) const {
    Eigen::VectorXd x(y.size());
    for (int i = 0; i < static_cast<int>(n_); ++i) x[i] = y[to_new(i)];
    return x;
  }

 private:
  int to_new(int i) const {
    const int nb = static_cast<int>(n_) / c_;
    return (i % nb) * c_ + i / nb;
  }

  Eigen::Index n_ = -1;
  int c_ = 1;
  std::vector<int> outer_, inner_;
  std::vector<int> map_;
  SparseMatrix permuted_;
};

}  // namespace

struct LinearSolver::Reorder {
  Interleave map;
};

struct LinearSolver::Factor {
  Ilu0 ilu;
  Eigen::Index size = 0;
  bool stale = false;
};

LinearSolver::LinearSolver(SolverSettings settings) : settings_(settings) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Eigen::VectorXd LinearSolver::direct(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol) {
  const Eigen::SparseMatrix<double> col = a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(col);
  lu.factorize(col);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage(), 1.0);
  Eigen::VectorXd x = lu.solve(b);
  double res = relative_residual(a, x, b);
  // A couple of refinement sweeps rescue mildly ill-conditioned systems.
  for (int it = 0; it < 3 && res > rtol; ++it) {
    x += lu.solve(b - a * x);
    res = relative_residual(a, x, b);
  }
  if (!(res <= rtol)) throw SolverError("sparse LU solve missed the residual tolerance", res);
  return x;
}

Eigen::VectorXd LinearSolver::solve(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol,
                                    const Eigen::VectorXd* guess) {
  if (guess && guess->size() != b.size()) guess = nullptr;
  if (a.rows() != a.cols() || a.rows() != b.size()) throw std::invalid_argument("solve: dimension mismatch");
  if (a.rows() == 0) return Eigen::VectorXd();
  if (b.squaredNorm() == 0) return Eigen::VectorXd::Zero(b.size());
  if (rtol <= 0) rtol = settings_.rtol;
  if (settings_.kind == SolverSettings::Kind::direct) return direct(a, b, rtol);
  const int c = settings_.components;
  if (c <= 1 || a.rows() % c != 0 || !a.isCompressed()) return iterate(a, b, rtol, guess);

  if (!reorder_) reorder_ = std::make_unique<Reorder>();
  if (!reorder_->map.matches(a)) reorder_->map.build(a, c);
  const SparseMatrix& ap = reorder_->map.apply(a);
  const Eigen::VectorXd bp = reorder_->map.forward(b);
  Eigen::VectorXd gp;
  if (guess) gp = reorder_->map.forward(*guess);
  return reorder_->map.backward(iterate(ap, bp, rtol, guess ? &gp : nullptr));
}

Eigen::VectorXd LinearSolver::iterate(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol,
                                      const Eigen::VectorXd* guess) {

  double res = 1.0;
  int its = 0;
  if (factor_ && factor_->size == a.rows() && !factor_->stale) {
    // A reused factor gets a short leash before it is rebuilt.
    Eigen::VectorXd x = bicgstab(factor_->ilu, a, b, guess, rtol, 4 * settings_.refresh_iterations, res, its);
    last_iterations_ = its;
    if (its > settings_.refresh_iterations) factor_->stale = true;
    if (res <= rtol) return x;
  }
  factor_ = std::make_unique<Factor>();
  factor_->size = a.rows();
  ++factorizations_;
  if (factor_->ilu.compute(a)) {
    Eigen::VectorXd x = bicgstab(factor_->ilu, a, b, guess, rtol, settings_.max_iterations, res, its);
    last_iterations_ = its;
    if (its > settings_.refresh_iterations) factor_->stale = true;
    if (res <= rtol) return x;
  } else {
    factor_.reset();
  }
  {
    Eigen::IncompleteLUT<double> ilut;
    ilut.setDroptol(settings_.ilu_drop_tol);
    ilut.setFillfactor(settings_.ilu_fill);
    ilut.compute(a);
    if (ilut.info() == Eigen::Success) {
      Eigen::VectorXd x = bicgstab(ilut, a, b, guess, rtol, settings_.max_iterations, res, its);
      last_iterations_ = its;
      if (res <= rtol) return x;
    }
  }
  if (settings_.kind == SolverSettings::Kind::automatic && a.rows() <= settings_.direct_limit)
    return direct(a, b, rtol);
  throw SolverError("BiCGSTAB did not converge", res);
}

Eigen::VectorXd LinearSolver::solve_transpose(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol,
                                              const Eigen::VectorXd* guess) {
  const SparseMatrix at = a.transpose();
  return solve(at, b, rtol, guess);
}

Eigen::VectorXd solve(const SparseMatrix& a, const Eigen::VectorXd& b, const SolverSettings& settings) {
  LinearSolver s(settings);
  return s.solve(a, b);
}

Eigen::VectorXd solve_transpose(const SparseMatrix& a, const Eigen::VectorXd& b, const SolverSettings& settings) {
  LinearSolver s(settings);
  return s.solve_transpose(a, b);
}

}  // namespace pudwr
