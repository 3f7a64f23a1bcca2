#pragma once

// Runs the library on the dense-oracle instance and reports the largest
// absolute deviations.

#include <algorithm>
#include <cmath>

#include "dense_oracle.hpp"
#include "pudwr/estimator.hpp"
#include "pudwr/study.hpp"

namespace oracle {

inline pudwr::MeshPtr library_mesh() {
  using pudwr::BoundaryId;
  auto coarse = pudwr::CoarseMesh::create(
      {{0, 0}, {2, 0}, {2, 1}, {0, 1}}, {{0, 1, 2, 3}}, [](const pudwr::CoarseMesh&, std::size_t, int f) {
        return f == 3 ? BoundaryId::dirichlet : f == 2 ? BoundaryId::robin : BoundaryId::neumann;
      });
  return pudwr::Mesh::uniform(coarse, 1);
}

inline pudwr::Problem library_problem(const Params& p) {
  pudwr::ModelParams mp;
  mp.Le = p.Le;
  mp.alpha = p.alpha;
  mp.beta = p.beta;
  mp.robin_k = p.kappa;
  pudwr::Problem pr = pudwr::combustion_problem(mp, p.T, p.area);
  pr.initial = [](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(initial_theta(x.x(), x.y()), initial_species(x.x(), x.y()));
  };
  return pr;
}

// Library dof -> oracle node.
inline std::vector<int> node_map(const pudwr::FESpace& space) {
  std::vector<int> map(space.n_dofs());
  for (std::size_t d = 0; d < space.n_dofs(); ++d) {
    const Eigen::Vector2d x = space.support_point(d);
    map[d] = static_cast<int>(std::lround(x.x())) + 3 * static_cast<int>(std::lround(2 * x.y()));
  }
  return map;
}

inline Vec to_oracle(const std::vector<int>& map, const Eigen::VectorXd& v) {
  Vec out(18);
  const auto n = map.size();
  for (std::size_t d = 0; d < n; ++d) {
    out[map[d]] = v[d];
    out[9 + map[d]] = v[n + d];
  }
  return out;
}

struct Deviation {
  double residual = 0, jacobian = 0, adjoint = 0, estimator = 0;
  double estimator_value = 0;
};

inline Deviation compare_with_library() {
  using namespace pudwr;
  const Params p;
  const Problem pr = library_problem(p);
  const MeshPtr mesh = library_mesh();
  const SpaceTimeMesh stm = SpaceTimeMesh::uniform(mesh, TimePartition::uniform(p.T, p.M));
  SpaceCache cache;
  SweepOptions so;
  so.linear.kind = SolverSettings::Kind::direct;
  so.newton.abs_tol = 1e-13;
  const PrimalResult u = solve_primal(pr, stm, 1, cache, so);
  const Trajectory z = solve_adjoint(pr, stm, u.trajectory, 1, cache, so);
  const SpacePtr space = u.trajectory.space(0);
  const auto map = node_map(*space);
  const auto n = map.size();
  const double k = p.T / p.M;

  Deviation dev;
  // Residual and Jacobian at the first computed state against the initial one.
  const Eigen::VectorXd u0 = u.trajectory.initial();
  const Eigen::VectorXd u1 = u.trajectory.load(0);
  const StepSystem sys = assemble_step(pr, *space, u1, u0, 0.0, k, true);
  Vec r;
  Mat j;
  step(p, to_oracle(map, u1), to_oracle(map, u0), k, r, &j);
  const Vec lib_r = to_oracle(map, sys.residual);
  dev.residual = (lib_r - r).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd lib_j = Eigen::MatrixXd(sys.jacobian);
  for (std::size_t a = 0; a < 2 * n; ++a)
    for (std::size_t b = 0; b < 2 * n; ++b) {
      const int oa = static_cast<int>(a < n ? map[a] : 9 + map[a - n]);
      const int ob = static_cast<int>(b < n ? map[b] : 9 + map[b - n]);
      dev.jacobian = std::max(dev.jacobian, std::abs(lib_j(a, b) - j(oa, ob)));
    }

  // Adjoint and estimator, both linearized at the library's primal states.
  std::vector<Vec> us;
  for (std::size_t i = 0; i < stm.size(); ++i) us.push_back(to_oracle(map, u.trajectory.load(i)));
  const std::vector<Vec> zs = adjoint(p, us);
  for (std::size_t i = 0; i < stm.size(); ++i)
    dev.adjoint = std::max(dev.adjoint, (to_oracle(map, z.load(i)) - zs[i]).cwiseAbs().maxCoeff());

  const IndicatorField field = evaluate_primal(pr, Variant::cg1_cg1, stm, u.trajectory, z, cache);
  const double eta = primal_estimator(p, to_oracle(map, u0), us, zs);
  dev.estimator = std::abs(field.eta() - eta);
  dev.estimator_value = eta;
  return dev;
}

}  // namespace oracle
