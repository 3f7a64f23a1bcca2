#include <doctest.h>

#include <random>

#include "oracle_compare.hpp"
#include "pudwr/estimator.hpp"
#include "pudwr/io.hpp"
#include "pudwr/study.hpp"

using namespace pudwr;

namespace {

struct Run {
  Problem problem;
  SpaceTimeMesh stm;
  SpaceCache cache;
  PrimalResult u;
  Trajectory z;
};

// Short combustion run on a locally refined channel with two meshes in time.
std::unique_ptr<Run> combustion_run(Variant v) {
  auto run = std::make_unique<Run>();
  const MeshPtr base = build_channel_geometry({});
  run->problem = combustion_problem({}, 60.0, mesh_area(*base));
  std::vector<std::size_t> marked;
  for (std::size_t c = 0; c < base->n_cells(); ++c)
    if (std::abs(base->center(c).x() - 10.0) < 2.0) marked.push_back(c);
  const MeshPtr fine = refine(*base, marked);
  run->stm.partition = TimePartition::uniform(0.9375, 4);
  run->stm.meshes = {base, base, fine, fine};
  run->problem.final_time = 0.9375;
  run->u = solve_primal(run->problem, run->stm, primal_order(v), run->cache);
  run->z = solve_adjoint(run->problem, run->stm, run->u.trajectory, adjoint_order(v), run->cache);
  return run;
}

}  // namespace

TEST_CASE("localized indicators sum to the global estimator") {
  for (Variant v : {Variant::cg1_cg1, Variant::cg1_cg2, Variant::cg2_cg2}) {
    auto run = combustion_run(v);
    const IndicatorField p = evaluate_primal(run->problem, v, run->stm, run->u.trajectory, run->z, run->cache);
    const IndicatorField a = evaluate_adjoint(run->problem, v, run->stm, run->u.trajectory, run->z, run->cache);
    for (const IndicatorField* f : {&p, &a}) {
      const double sum = aggregate(*f).total;
      CHECK(std::abs(sum - f->eta()) <= 1e-10 * std::abs(f->eta()));
      for (std::size_t n = 0; n < f->size(); ++n) {
        CHECK(std::abs(f->temporal_sum[n] - f->temporal_global[n]) <= 1e-10 * std::abs(f->eta()));
        CHECK(std::abs(f->spatial_sum[n] - f->spatial_global[n]) <= 1e-10 * std::abs(f->eta()));
      }
    }
  }
}

TEST_CASE("discrete weights give a vanishing residual") {
  auto run = combustion_run(Variant::cg1_cg1);
  const Trajectory& u = run->u.trajectory;
  double total = 0;
  SpacePtr prev_space = u.initial_space();
  Eigen::VectorXd prev = u.initial();
  for (std::size_t i = 0; i < run->stm.size(); ++i) {
    const SpacePtr s = u.space(i);
    StepState st;
    st.mesh = &s->mesh();
    st.t0 = run->stm.partition.t(i);
    st.k = run->stm.partition.k(i);
    st.u = gather(*s, u.load(i));
    st.u_prev = gather(*s, transfer_pair(*prev_space, prev, *s));
    const CellFunction z = gather(*s, run->z.load(i));
    total += residual_form(run->problem, st, {z, z}).total;
    prev = u.load(i);
    prev_space = s;
  }
  CHECK(std::abs(total) <= 1e-8);
}

TEST_CASE("dense oracle") {
  const oracle::Deviation d = oracle::compare_with_library();
  CHECK(d.residual <= 1e-12);
  CHECK(d.jacobian <= 1e-12);
  CHECK(d.adjoint <= 1e-12);
  CHECK(d.estimator <= 1e-12);
  CHECK(d.estimator_value != 0.0);
}

TEST_CASE("full estimator is the mean of primal and adjoint") {
  auto run = combustion_run(Variant::cg1_cg1);
  const IndicatorField p = evaluate_primal(run->problem, Variant::cg1_cg1, run->stm, run->u.trajectory, run->z, run->cache);
  const IndicatorField a = evaluate_adjoint(run->problem, Variant::cg1_cg1, run->stm, run->u.trajectory, run->z, run->cache);
  const IndicatorField f = combine_full(p, a);
  CHECK(f.eta() == doctest::Approx(0.5 * (p.eta() + a.eta())));
}

TEST_CASE("variant names") {
  for (Variant v : {Variant::cg1_cg1, Variant::cg1_cg2, Variant::cg2_cg2}) CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS(parse_variant("cg3cg3"));
  CHECK(primal_order(Variant::cg1_cg2) == 1);
  CHECK(adjoint_order(Variant::cg1_cg2) == 2);
}

TEST_CASE("weights reject mismatched orders") {
  const MeshPtr mesh = Mesh::uniform(rectangle_coarse_mesh(0, 1, 0, 1, 1, 1, BoundaryId::dirichlet), 1);
  const FESpace q1(mesh, 1), q2(mesh, 2);
  const Eigen::VectorXd v1 = Eigen::VectorXd::Zero(2 * q1.n_dofs());
  CHECK_THROWS(build_weights(Variant::cg2_cg2, q1, q1, q1, v1, v1, v1, v1, 0, 1));
}
