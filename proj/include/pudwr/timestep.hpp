#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

#include "pudwr/linalg.hpp"
#include "pudwr/model.hpp"
#include "pudwr/step_operator.hpp"
#include "pudwr/trajectory.hpp"

namespace pudwr {

struct NewtonSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_iter = 30;
  int max_halvings = 8;
};

class NewtonError : public std::runtime_error {
 public:
  NewtonError(std::size_t interval, const std::string& what)
      : std::runtime_error("Newton failed on interval " + std::to_string(interval + 1) + ": " + what),
        interval_(interval) {}
  std::size_t interval() const { return interval_; }

 private:
  std::size_t interval_;
};

struct SweepOptions {
  NewtonSettings newton;
  SolverSettings linear;
  /// Memory, disk spill, or no storage at all (goal value only).
  enum class Store { memory, disk, none };
  Store store = Store::memory;
  std::filesystem::path spill_dir;
  /// Called after each interval with (interval, number of intervals).
  std::function<void(std::size_t, std::size_t)> progress;
};

struct PrimalResult {
  Trajectory trajectory;
  double goal = 0.0;
  int newton_iterations = 0;
};

/// Forward dG(0) sweep with Newton's method on every interval.
PrimalResult solve_primal(const Problem& problem, const SpaceTimeMesh& stm, int order, SpaceCache& cache,
                          const SweepOptions& options = {});

/// Backward sweep of the exact discrete adjoint of the primal scheme,
/// linearized at `u` (embedded into cG(order) when its order is lower).
/// z after the final time is zero.
Trajectory solve_adjoint(const Problem& problem, const SpaceTimeMesh& stm, const Trajectory& u, int order,
                         SpaceCache& cache, const SweepOptions& options = {});

/// One primal step: Newton solve on interval i given the previous state
/// already transferred to the interval space; `guess` optionally replaces
/// u_prev as the starting point.
Eigen::VectorXd newton_step(const Problem& problem, const StepOperator& op, const Eigen::VectorXd& u_prev, double t0, double k, std::size_t interval,
                            const NewtonSettings& newton, LinearSolver& linear, int* iterations = nullptr,
                            const Eigen::VectorXd* guess = nullptr);

/// Converts a vector on a space of either order to the space `to` on the
/// same or a related mesh (embedding, vertex restriction or interpolation).
Eigen::VectorXd convert(const FESpace& from, const Eigen::VectorXd& v, const FESpace& to);

}  // namespace pudwr
