#include "pudwr/timestep.hpp"

#include <cmath>
#include <memory>

namespace pudwr {

Eigen::VectorXd convert(const FESpace& from, const Eigen::VectorXd& v, const FESpace& to) {
  return transfer_pair(from, v, to);
}

Eigen::VectorXd newton_step(const Problem& pr, const StepOperator& op, const Eigen::VectorXd& u_prev, double t0,
                            double k, std::size_t interval, const NewtonSettings& ns, LinearSolver& ls,
                            int* iterations, const Eigen::VectorXd* guess) {
  const FESpace& space = op.space();
  const Condensation& cond = op.condensation();
  const Eigen::VectorXd boundary = boundary_vector(pr, space, cond, t0 + k);
  Eigen::VectorXd u = guess ? *guess : u_prev;
  cond.apply(u, boundary);
  Eigen::VectorXd v = cond.restrict_to_free(u);

  // Trial points are assembled with their Jacobian: an accepted full step,
  // the common case, then needs no extra pass over the cells.
  Eigen::VectorXd r, r_trial;
  SparseMatrix jac, jac_trial;
  op.assemble(u, u_prev, t0, k, r, &jac);
  double norm = r.norm();
  const double target = std::max(ns.abs_tol, ns.rel_tol * norm);
  int it = 0;
  double norm_prev = 0.0;
  for (; norm > target; ++it) {
    if (it == ns.max_iter) throw NewtonError(interval, "no convergence, residual " + std::to_string(norm));
    // Inexact Newton: loose linear solves while far from the root, never
    // tighter than what reaching the target in one step requires.
    double eta = it == 0 ? 1e-3 : std::min(1e-3, 0.9 * (norm / norm_prev) * (norm / norm_prev));
    eta = std::max({eta, 0.5 * target / norm, ls.settings().rtol});
    norm_prev = norm;
    Eigen::VectorXd delta;
    try {
      delta = ls.solve(jac, -r, eta);
    } catch (const SolverError& e) {
      throw NewtonError(interval, e.what());
    }
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= ns.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::VectorXd v_trial = v + lambda * delta;
      Eigen::VectorXd u_trial = cond.distribute(v_trial, boundary);
      op.assemble(u_trial, u_prev, t0, k, r_trial, &jac_trial);
      const double n_trial = r_trial.norm();
      if (std::isfinite(n_trial) && n_trial < norm) {
        v = v_trial;
        u = std::move(u_trial);
        std::swap(r, r_trial);
        std::swap(jac, jac_trial);
        norm = n_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Stagnation at round-off level counts as converged.
      if (norm <= 1e3 * target) break;
      throw NewtonError(interval, "line search exhausted at residual " + std::to_string(norm));
    }
  }
  if (iterations) *iterations += it;
  return u;
}

PrimalResult solve_primal(const Problem& pr, const SpaceTimeMesh& stm, int order, SpaceCache& cache,
                          const SweepOptions& opt) {
  const TimePartition& tp = stm.partition;
  const std::size_t m = tp.size();
  if (stm.meshes.size() != m) throw std::invalid_argument("solve_primal: one mesh per interval required");
  PrimalResult res;
  const bool keep = opt.store != SweepOptions::Store::none;
  if (keep)
    res.trajectory = Trajectory(Trajectory::Kind::primal, m,
                                opt.store == SweepOptions::Store::disk ? Trajectory::Storage::disk
                                                                       : Trajectory::Storage::memory,
                                opt.spill_dir);

  SpacePtr prev_space = cache.get(stm.meshes[0], order);
  Eigen::VectorXd prev = initial_vector(pr, *prev_space);
  if (keep) res.trajectory.set_initial(prev_space, prev);

  double goal = 0.0;
  std::unique_ptr<StepOperator> op;
  Eigen::VectorXd prev2;  // state before prev, kept while the space is unchanged
  LinearSolver linear(opt.linear);
  for (std::size_t i = 0; i < m; ++i) {
    const SpacePtr space = cache.get(stm.meshes[i], order);
    const Condensation& cond = cache.condensation(space, pr.dirichlet);
    const Eigen::VectorXd u_prev = space == prev_space ? prev : transfer_pair(*prev_space, prev, *space);
    if (!op || &op->space() != space.get()) op = std::make_unique<StepOperator>(pr, *space, cond);
    // Linear extrapolation in time as the Newton start.
    Eigen::VectorXd guess;
    if (space == prev_space && prev2.size() == prev.size() && i > 0 && tp.k(i) == tp.k(i - 1))
      guess = 2.0 * prev - prev2;
    Eigen::VectorXd u = newton_step(pr, *op, u_prev, tp.t(i), tp.k(i), i, opt.newton, linear,
                                    &res.newton_iterations, guess.size() ? &guess : nullptr);
    goal += tp.k(i) * goal_integral(pr, space->mesh(), gather(*space, u));
    if (keep) res.trajectory.store(i, space, u);
    prev2 = space == prev_space ? std::move(prev) : Eigen::VectorXd();
    prev = std::move(u);
    prev_space = space;
    if (opt.progress) opt.progress(i, m);
  }
  res.goal = pr.goal_scale() * goal;
  return res;
}

Trajectory solve_adjoint(const Problem& pr, const SpaceTimeMesh& stm, const Trajectory& u, int order,
                         SpaceCache& cache, const SweepOptions& opt) {
  const TimePartition& tp = stm.partition;
  const std::size_t m = tp.size();
  if (u.size() != m) throw std::invalid_argument("solve_adjoint: primal trajectory length mismatch");
  Trajectory z(Trajectory::Kind::adjoint, m,
               opt.store == SweepOptions::Store::disk ? Trajectory::Storage::disk : Trajectory::Storage::memory,
               opt.spill_dir);

  SpacePtr next_space;
  Eigen::VectorXd next_mass;  // M_{i+1} z_{i+1} on the space of interval i+1
  std::unique_ptr<StepOperator> op;
  Eigen::VectorXd unused;
  SparseMatrix jac;
  LinearSolver linear(opt.linear);
  Eigen::VectorXd next_reduced;
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t i = m - 1 - step;
    const SpacePtr space = cache.get(stm.meshes[i], order);
    const Condensation& cond = cache.condensation(space, pr.dirichlet);
    const Eigen::VectorXd ui = convert(*u.space(i), u.load(i), *space);

    if (!op || &op->space() != space.get()) op = std::make_unique<StepOperator>(pr, *space, cond);
    op->assemble(ui, ui, tp.t(i), tp.k(i), unused, &jac);
    Eigen::VectorXd rhs = tp.k(i) * pr.goal_scale() * goal_gradient(pr, *space, ui);
    if (next_space) {
      if (next_space == space) {
        rhs += next_mass;
      } else {
        const SparseMatrix t = transfer_matrix(*space, *next_space);
        const auto n = static_cast<Eigen::Index>(space->n_dofs());
        const auto nn = static_cast<Eigen::Index>(next_space->n_dofs());
        rhs.head(n) += t.transpose() * next_mass.head(nn);
        rhs.tail(n) += t.transpose() * next_mass.tail(nn);
      }
    }
    // z of the later interval is a good Krylov start on an unchanged space.
    const Eigen::VectorXd zr = linear.solve_transpose(jac, cond.condense(rhs), 0.0,
                                                      next_space == space ? &next_reduced : nullptr);
    Eigen::VectorXd zi = cond.distribute(zr, Eigen::VectorXd());
    next_mass = mass_action(*space, zi);
    next_reduced = zr;
    next_space = space;
    z.store(i, space, zi);
    if (opt.progress) opt.progress(step, m);
  }
  return z;
}

}  // namespace pudwr
