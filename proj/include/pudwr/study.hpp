#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pudwr/estimator.hpp"

namespace pudwr {

struct VariantEstimate {
  Variant variant = Variant::cg1_cg1;
  double eta_k = 0, eta_h = 0;  // primal
  double adj_k = 0, adj_h = 0;  // adjoint
  /// |sum of localized indicators - global value| / |global value|.
  double localization_primal = 0, localization_adjoint = 0;

  double eta() const { return eta_k + eta_h; }
  double adjoint() const { return adj_k + adj_h; }
  double full() const { return 0.5 * (eta() + adjoint()); }
};

struct StudyRow {
  int level = 1;
  std::size_t intervals = 0;
  std::size_t cells = 0;
  std::size_t primal_dofs = 0;  // sum over intervals of cG(1)^2 dofs
  double goal = 0.0;            // J(u_kh) of the cG(1) solution
  std::optional<double> error;  // J_ref - J(u_kh)
  std::vector<VariantEstimate> estimates;
  double seconds = 0.0;
};

struct StudyOptions {
  Problem problem;
  MeshPtr base;  // level-1 mesh; level L is the uniform refinement L of its roots
  std::size_t base_intervals = 256;
  int time_factor = 2;
  int levels = 3;
  std::vector<Variant> variants{Variant::cg1_cg1, Variant::cg1_cg2, Variant::cg2_cg2};
  /// Reference goal; computed at `reference_level` when absent.
  std::optional<double> reference_goal;
  int reference_level = 0;  // 0: levels + 1
  SweepOptions sweep;
  /// Trajectories larger than this are spilled to disk.
  double spill_threshold_bytes = 768.0 * 1024 * 1024;
  std::function<void(const std::string&)> log;
  /// Called after every finished level.
  std::function<void(const StudyRow&)> on_row;
};

MeshPtr mesh_at_level(const MeshPtr& base, int level);
TimePartition partition_at_level(double final_time, std::size_t base_intervals, int time_factor, int level);

/// Goal value of a cG(1) run at the given level without storing the trajectory.
double reference_goal(const StudyOptions& options, int level);

/// Runs all variants at one level; `reference` feeds the error column.
StudyRow run_level(const StudyOptions& options, int level, std::optional<double> reference);

struct StudyResult {
  std::vector<StudyRow> rows;
  std::optional<double> reference_goal;
};
StudyResult run_study(const StudyOptions& options);

}  // namespace pudwr
