#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pudwr/estimator.hpp"

namespace pudwr {

struct MarkingConfig {
  double time_fraction = 0.5;
  double space_fraction = 0.33;
  int max_loops = 3;
  /// Stop once |eta| falls below this value (0 disables the test).
  double tolerance = 0.0;
};

/// Indices of the ceil(fraction * n) largest |values|; ties go to the lower index.
std::vector<std::size_t> mark_largest(std::span<const double> values, double fraction);

std::vector<std::size_t> mark_time(std::span<const double> interval_indicators, double fraction);
std::vector<std::vector<std::size_t>> mark_space(const std::vector<Eigen::VectorXd>& cell_indicators,
                                                 double fraction);

/// Bisects the marked intervals and refines the marked cells of every
/// interval mesh; both halves of a bisected interval receive the refined
/// mesh of their parent.
SpaceTimeMesh refine_space_time(const SpaceTimeMesh& stm, std::span<const std::size_t> time_marks,
                                const std::vector<std::vector<std::size_t>>& space_marks);

struct AdaptRecord {
  int loop = 0;
  std::size_t intervals = 0;
  std::size_t total_cells = 0;
  std::size_t primal_dofs = 0;  // sum over intervals of cG(1)^2 dofs
  double goal = 0.0;
  double eta_k = 0.0;
  double eta_h = 0.0;
  double eta = 0.0;
  std::optional<double> error;  // J_ref - J
};

/// Everything the loop produced in one iteration, handed to observers.
struct LoopState {
  const AdaptRecord& record;
  const SpaceTimeMesh& stm;
  const Trajectory& u;
  const IndicatorField& indicators;
};

/// Solver failure inside the loop; keeps the records of completed loops.
class AdaptError : public std::runtime_error {
 public:
  AdaptError(std::vector<AdaptRecord> records, const std::string& what)
      : std::runtime_error(what), records_(std::move(records)) {}
  const std::vector<AdaptRecord>& records() const { return records_; }

 private:
  std::vector<AdaptRecord> records_;
};

/// Solve, estimate (primal cG(1)/cG(1)), mark and refine until max_loops or
/// the tolerance is reached.
std::vector<AdaptRecord> adaptive_loop(const Problem& problem, SpaceTimeMesh initial, const MarkingConfig& config,
                                       std::optional<double> reference_goal, const SweepOptions& sweep = {},
                                       const std::function<void(const LoopState&)>& observer = {});

}  // namespace pudwr
