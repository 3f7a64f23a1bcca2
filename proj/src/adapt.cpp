#include "pudwr/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pudwr {

std::vector<std::size_t> mark_largest(std::span<const double> values, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("marking fraction must lie in [0,1]");
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(values.size()) - 1e-12));
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
  order.resize(std::min(count, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> mark_time(std::span<const double> interval_indicators, double fraction) {
  return mark_largest(interval_indicators, fraction);
}

std::vector<std::vector<std::size_t>> mark_space(const std::vector<Eigen::VectorXd>& cells, double fraction) {
  std::vector<std::vector<std::size_t>> marks;
  marks.reserve(cells.size());
  for (const auto& v : cells) marks.push_back(mark_largest({v.data(), static_cast<std::size_t>(v.size())}, fraction));
  return marks;
}

SpaceTimeMesh refine_space_time(const SpaceTimeMesh& stm, std::span<const std::size_t> time_marks,
                                const std::vector<std::vector<std::size_t>>& space_marks) {
  if (space_marks.size() != stm.size()) throw std::invalid_argument("refine_space_time: one mark set per interval");
  std::vector<MeshPtr> refined(stm.size());
  for (std::size_t i = 0; i < stm.size(); ++i)
    refined[i] = space_marks[i].empty() ? stm.meshes[i] : refine(*stm.meshes[i], space_marks[i]);
  std::vector<std::size_t> parent;
  SpaceTimeMesh out;
  out.partition = stm.partition.bisect(time_marks, &parent);
  for (std::size_t p : parent) out.meshes.push_back(refined[p]);
  return out;
}

std::vector<AdaptRecord> adaptive_loop(const Problem& pr, SpaceTimeMesh stm, const MarkingConfig& cfg,
                                       std::optional<double> reference_goal, const SweepOptions& sweep,
                                       const std::function<void(const LoopState&)>& observer) {
  std::vector<AdaptRecord> records;
  for (int loop = 0;; ++loop) {
    SpaceCache cache;
    PrimalResult primal;
    IndicatorField field;
    try {
      primal = solve_primal(pr, stm, 1, cache, sweep);
      const Trajectory z = solve_adjoint(pr, stm, primal.trajectory, 1, cache, sweep);
      field = evaluate_primal(pr, Variant::cg1_cg1, stm, primal.trajectory, z, cache);
    } catch (const std::exception& e) {
      throw AdaptError(records, "adaptive loop " + std::to_string(loop) + ": " + e.what());
    }

    AdaptRecord rec;
    rec.loop = loop;
    rec.intervals = stm.size();
    rec.total_cells = stm.total_cells();
    for (const auto& m : stm.meshes) rec.primal_dofs += kComponents * cache.get(m, 1)->n_dofs();
    rec.goal = primal.goal;
    rec.eta_k = field.eta_k();
    rec.eta_h = field.eta_h();
    rec.eta = field.eta();
    if (reference_goal) rec.error = *reference_goal - primal.goal;
    records.push_back(rec);
    if (observer) observer({records.back(), stm, primal.trajectory, field});

    if (loop >= cfg.max_loops || (cfg.tolerance > 0 && std::abs(rec.eta) < cfg.tolerance)) break;

    const Aggregate temporal = aggregate(field, Part::temporal);
    const Aggregate spatial = aggregate(field, Part::spatial);
    const auto time_marks = mark_time(temporal.intervals, cfg.time_fraction);
    const auto space_marks = mark_space(spatial.cells, cfg.space_fraction);
    stm = refine_space_time(stm, time_marks, space_marks);
  }
  return records;
}

}  // namespace pudwr
