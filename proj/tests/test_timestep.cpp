#include <doctest.h>

#include <filesystem>
#include <random>

#include "pudwr/io.hpp"
#include "pudwr/step_operator.hpp"
#include "pudwr/study.hpp"
#include "pudwr/timestep.hpp"

using namespace pudwr;

namespace {

MeshPtr refined_channel() {
  MeshPtr mesh = build_channel_geometry({});
  std::vector<std::size_t> marked;
  for (std::size_t c = 0; c < mesh->n_cells(); ++c)
    if (std::abs(mesh->center(c).x() - 15.0) < 3.0) marked.push_back(c);
  return refine(*mesh, marked);
}

}  // namespace

TEST_CASE("condensed step operator equals the condensed generic assembly") {
  const MeshPtr mesh = refined_channel();
  const Problem pr = combustion_problem({}, 60.0, mesh_area(*mesh));
  for (int order : {1, 2}) {
    const FESpace space(mesh, order);
    const Condensation cond(space, pr.dirichlet);
    REQUIRE(space.n_hanging() > 0);
    const StepOperator op(pr, space, cond);
    const auto n = static_cast<Eigen::Index>(space.n_dofs());
    std::mt19937 rng(order);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd s(2 * n), prev(2 * n);
    for (Eigen::Index i = 0; i < 2 * n; ++i) s[i] = u(rng), prev[i] = u(rng);
    cond.apply(s, boundary_vector(pr, space, cond, 1.0));

    Eigen::VectorXd r;
    SparseMatrix jac;
    op.assemble(s, prev, 0.5, 0.25, r, &jac);
    const StepSystem sys = assemble_step(pr, space, s, prev, 0.5, 0.25, true);
    const SparseMatrix c = condensation_matrix(cond);
    const Eigen::VectorXd r_ref = cond.condense(sys.residual);
    const SparseMatrix j_ref = SparseMatrix(c.transpose()) * sys.jacobian * c;
    CHECK((r - r_ref).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((Eigen::MatrixXd(jac) - Eigen::MatrixXd(j_ref)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("a matrix left over from another mesh with equal counts is not reused") {
  // mirrored refinements give the same dof and nonzero counts but a different layout
  const MeshPtr base = Mesh::uniform(rectangle_coarse_mesh(0, 4, 0, 4, 4, 4, BoundaryId::neumann), 0);
  const auto refined_at = [&](double x, double y) {
    std::vector<std::size_t> marked;
    for (std::size_t c = 0; c < base->n_cells(); ++c)
      if ((base->center(c) - Eigen::Vector2d(x, y)).norm() < 0.6) marked.push_back(c);
    return refine(*base, marked);
  };
  const MeshPtr a = refined_at(0.5, 0.5), b = refined_at(3.5, 3.5);
  const Problem pr = heat_problem(1.0);
  const FESpace sa(a, 1), sb(b, 1);
  REQUIRE(sa.n_dofs() == sb.n_dofs());
  const Condensation ca(sa, pr.dirichlet), cb(sb, pr.dirichlet);
  const StepOperator oa(pr, sa, ca), ob(pr, sb, cb);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(sa.n_dofs()));
  Eigen::VectorXd r;
  SparseMatrix reused, fresh;
  oa.assemble(u, u, 0.0, 0.1, r, &reused);
  ob.assemble(u, u, 0.0, 0.1, r, &reused);
  ob.assemble(u, u, 0.0, 0.1, r, &fresh);
  REQUIRE(reused.nonZeros() == fresh.nonZeros());
  CHECK((Eigen::MatrixXd(reused) - Eigen::MatrixXd(fresh)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("time partition bisection") {
  const TimePartition tp = TimePartition::uniform(1.0, 4);
  std::vector<std::size_t> parent;
  const std::size_t marks[] = {1, 3};
  const TimePartition b = tp.bisect(marks, &parent);
  REQUIRE(b.size() == 6);
  CHECK(b.k(1) == doctest::Approx(0.125));
  CHECK(b.final_time() == doctest::Approx(1.0));
  CHECK(parent == std::vector<std::size_t>{0, 1, 1, 2, 3, 3});
}

TEST_CASE("trajectory spill to disk round trips bit for bit") {
  const MeshPtr mesh = build_channel_geometry({});
  const SpacePtr space = std::make_shared<FESpace>(mesh, 1);
  std::filesystem::path dir;
  {
    Trajectory t(Trajectory::Kind::primal, 3, Trajectory::Storage::disk, std::filesystem::temp_directory_path());
    std::mt19937 rng(4);
    std::normal_distribution<double> g;
    std::vector<Eigen::VectorXd> data;
    for (std::size_t i = 0; i < 3; ++i) {
      Eigen::VectorXd v(2 * static_cast<Eigen::Index>(space->n_dofs()));
      for (auto& x : v) x = g(rng);
      t.store(i, space, v);
      data.push_back(v);
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK(checksum(t.load(i)) == checksum(data[i]));
    t.release(1);
    CHECK_FALSE(t.has(1));
  }
}

TEST_CASE("primal sweep on the channel converges") {
  const MeshPtr mesh = build_channel_geometry({});
  const Problem pr = combustion_problem({}, 60.0, mesh_area(*mesh));
  const SpaceTimeMesh stm = SpaceTimeMesh::uniform(mesh, TimePartition::uniform(1.875, 8));
  SpaceCache cache;
  const PrimalResult r = solve_primal(pr, stm, 1, cache);
  CHECK(r.goal > 0);
  CHECK(r.newton_iterations <= 8 * 6);
  // Dirichlet data held on the inflow wall
  const SpacePtr space = r.trajectory.space(7);
  const Condensation& cond = cache.condensation(space, pr.dirichlet);
  const Eigen::VectorXd u = r.trajectory.load(7);
  const auto n = static_cast<Eigen::Index>(space->n_dofs());
  for (Eigen::Index d = 0; d < n; ++d)
    if (cond.is_dirichlet(static_cast<std::size_t>(d))) {
      CHECK(u[d] == 1.0);
      CHECK(u[n + d] == 0.0);
    }
}

TEST_CASE("adjoint of a linear problem reproduces the goal") {
  // Discrete duality for a linear problem: J(u) = (M u_0, z_1) + sum_n F_n(z_n).
  const Problem pr = heat_problem(0.5);
  const MeshPtr mesh = Mesh::uniform(rectangle_coarse_mesh(0, 1, 0, 1, 2, 2, BoundaryId::dirichlet), 2);
  const SpaceTimeMesh stm = SpaceTimeMesh::uniform(mesh, TimePartition::uniform(0.5, 5));
  SpaceCache cache;
  const PrimalResult u = solve_primal(pr, stm, 1, cache);
  const Trajectory z = solve_adjoint(pr, stm, u.trajectory, 1, cache);
  const SpacePtr space = u.trajectory.space(0);
  double dual = mass_action(*space, u.trajectory.initial()).dot(z.load(0));
  for (std::size_t i = 0; i < stm.size(); ++i) {
    // F_n(phi) = A(0; phi) with zero state and zero previous state, negated
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(u.trajectory.load(i).size());
    const StepSystem s = assemble_step(pr, *space, zero, zero, stm.partition.t(i), stm.partition.k(i), false);
    dual -= s.residual.dot(z.load(i));
  }
  CHECK(dual == doctest::Approx(u.goal).epsilon(1e-9));
}
