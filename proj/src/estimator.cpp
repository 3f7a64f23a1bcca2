#include "pudwr/estimator.hpp"

#include <numeric>
#include <stdexcept>

namespace pudwr {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::cg1_cg1: return "cg1cg1";
    case Variant::cg1_cg2: return "cg1cg2";
    default: return "cg2cg2";
  }
}

Variant parse_variant(const std::string& name) {
  if (name == "cg1cg1") return Variant::cg1_cg1;
  if (name == "cg1cg2") return Variant::cg1_cg2;
  if (name == "cg2cg2") return Variant::cg2_cg2;
  throw std::invalid_argument("unknown estimator variant '" + name + "'");
}

namespace {
double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }
}  // namespace

double IndicatorField::eta_k() const { return sum(temporal_global); }
double IndicatorField::eta_h() const { return sum(spatial_global); }
double IndicatorField::localized_k() const { return sum(temporal_sum); }
double IndicatorField::localized_h() const { return sum(spatial_sum); }

Eigen::VectorXd IndicatorField::combined(std::size_t n) const {
  if (!has_localized()) throw std::logic_error("IndicatorField: localized indicators were not kept");
  return temporal[n] + spatial[n];
}

IntervalWeights build_weights(Variant variant, const FESpace& pu_space, const FESpace& u_space,
                              const FESpace& z_space, const Eigen::VectorXd& u_n, const Eigen::VectorXd& u_prev,
                              const Eigen::VectorXd& z_n, const Eigen::VectorXd& z_next, double t0, double k) {
  if (u_space.order() != primal_order(variant) || z_space.order() != adjoint_order(variant))
    throw std::invalid_argument("build_weights: solution orders do not match the variant");
  const Mesh& mesh = pu_space.mesh();
  IntervalWeights w;
  w.state.mesh = &mesh;
  w.state.t0 = t0;
  w.state.k = k;
  const CellFunction zero = zero_cell_function(mesh, 1);

  // cG(1) representatives: the solutions themselves or their vertex restrictions.
  const Eigen::VectorXd u1 = u_space.order() == 1 ? u_n : restrict_pair(u_space, u_n, pu_space);
  const Eigen::VectorXd u1_prev = u_space.order() == 1 ? u_prev : restrict_pair(u_space, u_prev, pu_space);
  const Eigen::VectorXd z1 = z_space.order() == 1 ? z_n : restrict_pair(z_space, z_n, pu_space);
  const Eigen::VectorXd z1_next = z_space.order() == 1 ? z_next : restrict_pair(z_space, z_next, pu_space);

  const CellFunction gu = gather(pu_space, u1);
  const CellFunction gu_prev = gather(pu_space, u1_prev);
  const CellFunction gz = gather(pu_space, z1);
  const CellFunction gz_next = gather(pu_space, z1_next);

  w.state.u = gu;
  w.state.u_prev = gu_prev;
  w.z = gz;
  w.z_next = gz_next;

  w.primal_temporal = {zero, gz_next - gz};
  w.adjoint_temporal = {gu_prev - gu, zero};

  CellFunction zs, us;
  switch (variant) {
    case Variant::cg1_cg1:
      zs = patch_interp_pair(pu_space, z_n) - gz;
      us = patch_interp_pair(pu_space, u_n) - gu;
      break;
    case Variant::cg1_cg2:
      zs = gather(z_space, z_n) - gz;
      us = patch_interp_pair(pu_space, u_n) - gu;
      break;
    case Variant::cg2_cg2:
      zs = gather(z_space, z_n) - gz;
      us = gather(u_space, u_n) - gu;
      break;
  }
  w.primal_spatial = {zs, zs};
  w.adjoint_spatial = {us, us};
  return w;
}

namespace {

enum class Which { primal, adjoint };

IndicatorField evaluate(Which which, const Problem& pr, Variant variant, const SpaceTimeMesh& stm,
                        const Trajectory& u, const Trajectory& z, SpaceCache& cache, const EstimatorOptions& opt) {
  const TimePartition& tp = stm.partition;
  const std::size_t m = tp.size();
  if (u.size() != m || z.size() != m) throw std::invalid_argument("estimator: trajectory length mismatch");
  IndicatorField field;
  field.pu.resize(m);
  field.temporal_sum.resize(m);
  field.spatial_sum.resize(m);
  field.temporal_global.resize(m);
  field.spatial_global.resize(m);
  if (opt.keep_localized) {
    field.temporal.resize(m);
    field.spatial.resize(m);
  }

  SpacePtr prev_space = u.initial_space();
  Eigen::VectorXd prev = u.initial();
  Eigen::VectorXd z_cur = z.load(0);
  for (std::size_t i = 0; i < m; ++i) {
    const SpacePtr pu = cache.get(stm.meshes[i], 1);
    const SpacePtr us = u.space(i);
    const SpacePtr zs = z.space(i);
    if (us->order() != primal_order(variant) || zs->order() != adjoint_order(variant))
      throw std::invalid_argument("estimator: trajectories were not solved at the orders of the variant");
    Eigen::VectorXd u_n = u.load(i);
    const Eigen::VectorXd u_prev = transfer_pair(*prev_space, prev, *us);
    Eigen::VectorXd z_next_raw = i + 1 < m ? z.load(i + 1) : Eigen::VectorXd();
    const Eigen::VectorXd z_next = i + 1 < m ? transfer_pair(*z.space(i + 1), z_next_raw, *zs)
                                             : Eigen::VectorXd::Zero(z_cur.size());

    const IntervalWeights w = build_weights(variant, *pu, *us, *zs, u_n, u_prev, z_cur, z_next, tp.t(i), tp.k(i));
    FormValue t, s;
    if (which == Which::primal) {
      t = residual_form(pr, w.state, w.primal_temporal, pu.get());
      s = residual_form(pr, w.state, w.primal_spatial, pu.get());
    } else {
      t = adjoint_form(pr, w.state, w.z, w.z_next, w.adjoint_temporal, pu.get());
      s = adjoint_form(pr, w.state, w.z, w.z_next, w.adjoint_spatial, pu.get());
    }
    field.pu[i] = pu;
    field.temporal_global[i] = t.total;
    field.spatial_global[i] = s.total;
    field.temporal_sum[i] = t.localized.sum();
    field.spatial_sum[i] = s.localized.sum();
    if (opt.keep_localized) {
      field.temporal[i] = std::move(t.localized);
      field.spatial[i] = std::move(s.localized);
    }
    prev = std::move(u_n);
    prev_space = us;
    z_cur = std::move(z_next_raw);
  }
  return field;
}

}  // namespace

IndicatorField evaluate_primal(const Problem& pr, Variant variant, const SpaceTimeMesh& stm, const Trajectory& u,
                               const Trajectory& z, SpaceCache& cache, const EstimatorOptions& opt) {
  return evaluate(Which::primal, pr, variant, stm, u, z, cache, opt);
}

IndicatorField evaluate_adjoint(const Problem& pr, Variant variant, const SpaceTimeMesh& stm, const Trajectory& u,
                                const Trajectory& z, SpaceCache& cache, const EstimatorOptions& opt) {
  return evaluate(Which::adjoint, pr, variant, stm, u, z, cache, opt);
}

IndicatorField combine_full(const IndicatorField& a, const IndicatorField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("combine_full: interval count mismatch");
  IndicatorField f;
  f.pu = a.pu;
  const auto half = [](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.5 * (x[i] + y[i]);
    return out;
  };
  f.temporal_sum = half(a.temporal_sum, b.temporal_sum);
  f.spatial_sum = half(a.spatial_sum, b.spatial_sum);
  f.temporal_global = half(a.temporal_global, b.temporal_global);
  f.spatial_global = half(a.spatial_global, b.spatial_global);
  if (a.has_localized() && b.has_localized()) {
    for (std::size_t n = 0; n < a.size(); ++n) {
      f.temporal.push_back(0.5 * (a.temporal[n] + b.temporal[n]));
      f.spatial.push_back(0.5 * (a.spatial[n] + b.spatial[n]));
    }
  }
  return f;
}

Eigen::VectorXd cell_indicators(const FESpace& pu, const Eigen::VectorXd& dof_values) {
  Eigen::VectorXd cells(pu.mesh().n_cells());
  for (std::size_t c = 0; c < pu.mesh().n_cells(); ++c) {
    double s = 0;
    for (int d : pu.cell_dofs(c)) s += dof_values[d];
    cells[c] = s;
  }
  return cells;
}

Aggregate aggregate(const IndicatorField& field, Part part) {
  if (!field.has_localized()) throw std::logic_error("aggregate: localized indicators were not kept");
  Aggregate agg;
  for (std::size_t n = 0; n < field.size(); ++n) {
    Eigen::VectorXd v = part == Part::temporal  ? field.temporal[n]
                        : part == Part::spatial ? field.spatial[n]
                                                : field.combined(n);
    agg.cells.push_back(cell_indicators(*field.pu[n], v));
    agg.intervals.push_back(v.sum());
    agg.total += v.sum();
  }
  return agg;
}

}  // namespace pudwr
