#include "pudwr/study.hpp"

#include <chrono>
#include <cmath>

namespace pudwr {

MeshPtr mesh_at_level(const MeshPtr& base, int level) {
  if (level < 1) throw std::invalid_argument("mesh_at_level: levels start at 1");
  return Mesh::uniform(base->coarse_ptr(), level);
}

TimePartition partition_at_level(double final_time, std::size_t base_intervals, int time_factor, int level) {
  std::size_t m = base_intervals;
  for (int l = 1; l < level; ++l) m *= static_cast<std::size_t>(time_factor);
  return TimePartition::uniform(final_time, m);
}

namespace {

void say(const StudyOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

SweepOptions sweep_for(const StudyOptions& o, std::size_t dofs, std::size_t intervals) {
  SweepOptions s = o.sweep;
  const double bytes = 8.0 * static_cast<double>(dofs) * static_cast<double>(intervals);
  if (s.store == SweepOptions::Store::memory && bytes > o.spill_threshold_bytes) s.store = SweepOptions::Store::disk;
  return s;
}

double relative_gap(double localized, double global) {
  const double d = std::abs(localized - global);
  return global != 0.0 ? d / std::abs(global) : d;
}

void estimate(const Problem& pr, Variant v, const SpaceTimeMesh& stm, const Trajectory& u, const Trajectory& z,
              SpaceCache& cache, VariantEstimate& out) {
  const EstimatorOptions eo{.keep_localized = false};
  const IndicatorField p = evaluate_primal(pr, v, stm, u, z, cache, eo);
  const IndicatorField a = evaluate_adjoint(pr, v, stm, u, z, cache, eo);
  out.variant = v;
  out.eta_k = p.eta_k();
  out.eta_h = p.eta_h();
  out.adj_k = a.eta_k();
  out.adj_h = a.eta_h();
  out.localization_primal = relative_gap(p.localized_k() + p.localized_h(), p.eta());
  out.localization_adjoint = relative_gap(a.localized_k() + a.localized_h(), a.eta());
}

}  // namespace

double reference_goal(const StudyOptions& o, int level) {
  const SpaceTimeMesh stm = SpaceTimeMesh::uniform(
      mesh_at_level(o.base, level),
      partition_at_level(o.problem.final_time, o.base_intervals, o.time_factor, level));
  SpaceCache cache;
  SweepOptions s = o.sweep;
  s.store = SweepOptions::Store::none;
  return solve_primal(o.problem, stm, 1, cache, s).goal;
}

StudyRow run_level(const StudyOptions& o, int level, std::optional<double> reference) {
  const auto start = std::chrono::steady_clock::now();
  const Problem& pr = o.problem;
  const SpaceTimeMesh stm = SpaceTimeMesh::uniform(
      mesh_at_level(o.base, level), partition_at_level(pr.final_time, o.base_intervals, o.time_factor, level));
  SpaceCache cache;
  const std::size_t m = stm.size();
  const auto dofs = [&](int order) { return kComponents * cache.get(stm.meshes[0], order)->n_dofs(); };

  StudyRow row;
  row.level = level;
  row.intervals = m;
  row.cells = stm.meshes[0]->n_cells();
  row.primal_dofs = m * dofs(1);

  const auto wants = [&](Variant v) {
    return std::find(o.variants.begin(), o.variants.end(), v) != o.variants.end();
  };
  say(o, "level " + std::to_string(level) + ": M=" + std::to_string(m) + " N=" + std::to_string(row.cells));

  {
    PrimalResult u1 = solve_primal(pr, stm, 1, cache, sweep_for(o, dofs(1), m));
    row.goal = u1.goal;
    if (reference) row.error = *reference - u1.goal;
    say(o, "  cG(1) primal done, J = " + std::to_string(u1.goal));
    for (Variant v : {Variant::cg1_cg1, Variant::cg1_cg2}) {
      if (!wants(v)) continue;
      const int q = adjoint_order(v);
      const Trajectory z = solve_adjoint(pr, stm, u1.trajectory, q, cache, sweep_for(o, dofs(q), m));
      VariantEstimate e;
      estimate(pr, v, stm, u1.trajectory, z, cache, e);
      row.estimates.push_back(e);
      say(o, "  " + to_string(v) + " estimated");
    }
  }
  if (wants(Variant::cg2_cg2)) {
    const SweepOptions s2 = sweep_for(o, dofs(2), m);
    const PrimalResult u2 = solve_primal(pr, stm, 2, cache, s2);
    const Trajectory z = solve_adjoint(pr, stm, u2.trajectory, 2, cache, s2);
    VariantEstimate e;
    estimate(pr, Variant::cg2_cg2, stm, u2.trajectory, z, cache, e);
    row.estimates.push_back(e);
    say(o, "  cg2cg2 estimated");
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

StudyResult run_study(const StudyOptions& o) {
  StudyResult res;
  res.reference_goal = o.reference_goal ? o.reference_goal : o.problem.exact_goal;
  if (!res.reference_goal) {
    const int ref = o.reference_level > 0 ? o.reference_level : o.levels + 1;
    say(o, "reference run at level " + std::to_string(ref));
    res.reference_goal = reference_goal(o, ref);
  }
  for (int l = 1; l <= o.levels; ++l) {
    res.rows.push_back(run_level(o, l, res.reference_goal));
    if (o.on_row) o.on_row(res.rows.back());
  }
  return res;
}

}  // namespace pudwr
