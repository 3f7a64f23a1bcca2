// Acceptance run: one PASS/FAIL line per criterion. The combustion study
// (three levels plus the level-four reference) dominates the run time.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>

#include "oracle_compare.hpp"
#include "pudwr/adapt.hpp"
#include "pudwr/io.hpp"
#include "pudwr/study.hpp"

using namespace pudwr;

namespace {

int failures = 0;

void report(bool ok, const std::string& id, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

std::string num(double v) { return format_number(v); }

void note(const std::string& s) { std::cerr << s << std::endl; }

const VariantEstimate* find(const StudyRow& row, Variant v) {
  for (const auto& e : row.estimates)
    if (e.variant == v) return &e;
  return nullptr;
}

// --- criteria 1 and 2 -------------------------------------------------------

void check_study(const StudyResult& res) {
  const auto& rows = res.rows;
  std::string factors;
  bool ok_a = rows.size() >= 2;
  for (std::size_t l = 0; l < rows.size(); ++l) {
    std::cerr << "level " << rows[l].level << ": M=" << rows[l].intervals << " N=" << rows[l].cells
              << " J=" << num(rows[l].goal) << " error=" << num(*rows[l].error) << '\n';
    if (l == 0) continue;
    const double f = std::abs(*rows[l - 1].error) / std::abs(*rows[l].error);
    factors += (factors.empty() ? "" : ", ") + num(f);
    ok_a = ok_a && f >= 3.0 && f <= 6.0;
  }
  report(ok_a, "1a", "error reduction factors per level [" + factors + "] in [3, 6]");

  bool ok_b = true;
  std::string effs;
  for (std::size_t l = 1; l < rows.size(); ++l)
    for (Variant v : {Variant::cg1_cg1, Variant::cg2_cg2}) {
      const VariantEstimate* e = find(rows[l], v);
      const double ieff = e ? effectivity(e->eta(), *rows[l].error) : NAN;
      effs += (effs.empty() ? "" : ", ") + to_string(v) + "@L" + std::to_string(rows[l].level) + "=" + num(ieff);
      ok_b = ok_b && ieff >= 0.3 && ieff <= 3.0;
    }
  report(ok_b, "1b", "effectivities from level 2 [" + effs + "] in [0.3, 3]");

  const VariantEstimate* c = find(rows.front(), Variant::cg1_cg2);
  const double ratio = c ? std::abs(c->eta()) / std::abs(*rows.front().error) : NAN;
  report(ratio >= 1e3, "1c", "cg1cg2 |eta| / |error| at level 1 = " + num(ratio) + " >= 1e3");

  double worst = 0;
  for (const auto& row : rows)
    for (const auto& e : row.estimates) worst = std::max({worst, e.localization_primal, e.localization_adjoint});
  report(worst <= 1e-10, "2", "max |sum indicators - eta| / |eta| = " + num(worst) + " <= 1e-10");
}

// --- criterion 3 -------------------------------------------------------------

void check_orthogonality(const Problem& pr, const MeshPtr& base) {
  const SpaceTimeMesh stm = SpaceTimeMesh::uniform(base, TimePartition::uniform(pr.final_time, 256));
  SpaceCache cache;
  const PrimalResult u = solve_primal(pr, stm, 1, cache);
  const Trajectory z = solve_adjoint(pr, stm, u.trajectory, 1, cache);
  double total = 0;
  Eigen::VectorXd prev = u.trajectory.initial();
  for (std::size_t i = 0; i < stm.size(); ++i) {
    const SpacePtr s = u.trajectory.space(i);
    StepState st;
    st.mesh = &s->mesh();
    st.t0 = stm.partition.t(i);
    st.k = stm.partition.k(i);
    const Eigen::VectorXd ui = u.trajectory.load(i);
    st.u = gather(*s, ui);
    st.u_prev = gather(*s, prev);
    const CellFunction zi = gather(*s, z.load(i));
    total += residual_form(pr, st, {zi, zi}).total;
    prev = ui;
  }
  report(std::abs(total) <= 1e-8, "3", "residual with discrete adjoint weights = " + num(total) + ", |.| <= 1e-8");
}

// --- criterion 4 -------------------------------------------------------------

void check_derivatives(const Problem& pr, const MeshPtr& base) {
  const FESpace space(base, 1);
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 1e-7, k = 0.234375;
  double worst_j = 0, worst_g = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd s(2 * n), prev(2 * n), dir(2 * n);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      s[i] = unit(rng);
      prev[i] = unit(rng);
      dir[i] = unit(rng) - 0.5;
    }
    const StepSystem sys = assemble_step(pr, space, s, prev, 0.0, k, true);
    const Eigen::VectorXd rp = assemble_step(pr, space, s + h * dir, prev, 0.0, k, false).residual;
    const Eigen::VectorXd rm = assemble_step(pr, space, s - h * dir, prev, 0.0, k, false).residual;
    const Eigen::VectorXd jd = sys.jacobian * dir;
    worst_j = std::max(worst_j, (jd - (rp - rm) / (2 * h)).norm() / jd.norm());

    // full gradient against central differences in every coefficient; a single
    // directional derivative can cancel below the round-off of J / h
    const Eigen::VectorXd g = goal_gradient(pr, space, s);
    Eigen::VectorXd fd(2 * n);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      Eigen::VectorXd p = s, m = s;
      p[i] += h;
      m[i] -= h;
      fd[i] = (goal_integral(pr, space.mesh(), gather(space, p)) - goal_integral(pr, space.mesh(), gather(space, m))) /
              (2 * h);
    }
    worst_g = std::max(worst_g, (g - fd).norm() / g.norm());
  }
  report(worst_j <= 1e-6 && worst_g <= 1e-6, "4",
         "100 random states: Jacobian rel. dev. " + num(worst_j) + ", goal gradient rel. dev. " + num(worst_g) +
             " <= 1e-6");
}

// --- criterion 5 -------------------------------------------------------------

void check_heat() {
  StudyOptions o;
  o.problem = heat_problem(1.0);
  o.base = Mesh::uniform(rectangle_coarse_mesh(0, 1, 0, 1, 2, 2, BoundaryId::dirichlet), 1);
  o.base_intervals = 8;
  o.time_factor = 4;  // k shrinks with h^2, so the error should fall by 4 per level
  o.levels = 3;
  o.variants = {Variant::cg1_cg2};
  const StudyResult res = run_study(o);
  const auto& rows = res.rows;
  const double ieff = effectivity(rows.back().estimates.front().eta(), *rows.back().error);
  report(ieff >= 0.8 && ieff <= 1.25, "5a", "heat cg1cg2 effectivity at level 3 = " + num(ieff) + " in [0.8, 1.25]");
  bool ok = true;
  std::string slopes;
  for (std::size_t l = 1; l < rows.size(); ++l) {
    const double slope = std::log(std::abs(*rows[l - 1].error) / std::abs(*rows[l].error)) / std::log(2.0);
    slopes += (slopes.empty() ? "" : ", ") + num(slope);
    ok = ok && std::abs(slope - 2.0) <= 0.15 * 2.0;
  }
  report(ok, "5b", "heat error slopes in h with k ~ h^2 [" + slopes + "] within 15% of 2");
}

// --- criterion 6 -------------------------------------------------------------

void check_oracle() {
  const oracle::Deviation d = oracle::compare_with_library();
  const double worst = std::max({d.residual, d.jacobian, d.adjoint, d.estimator});
  report(worst <= 1e-12, "6",
         "dense oracle deviations: residual " + num(d.residual) + ", Jacobian " + num(d.jacobian) + ", adjoint " +
             num(d.adjoint) + ", estimator " + num(d.estimator) + " <= 1e-12");
}

// --- criteria 7 and 8 --------------------------------------------------------

double interpolate_loglog(const std::vector<std::pair<double, double>>& curve, double x) {
  // piecewise linear in log-log, extended by the end segments
  std::size_t i = 1;
  while (i + 1 < curve.size() && curve[i].first < x) ++i;
  const auto [x0, y0] = curve[i - 1];
  const auto [x1, y1] = curve[i];
  const double t = (std::log(x) - std::log(x0)) / (std::log(x1) - std::log(x0));
  return std::exp(std::log(y0) + t * (std::log(y1) - std::log(y0)));
}

struct FrontStats {
  std::size_t intervals = 0;
  double worst = 1.0;
  std::size_t worst_interval = 0;
  std::vector<double> fractions;
};

FrontStats front_tracking(const Problem& pr, const LoopState& st, int base_level) {
  FrontStats fs;
  SpaceCache cache;
  for (std::size_t i = 0; i < st.stm.size(); ++i) {
    const Mesh& mesh = *st.stm.meshes[i];
    const int top = mesh.max_level();
    if (top <= base_level) continue;
    const SpacePtr s = st.u.space(i);
    const Eigen::VectorXd u = st.u.load(i);
    const auto n = static_cast<Eigen::Index>(s->n_dofs());
    double best = -1, x_front = 0;
    for (Eigen::Index d = 0; d < n; ++d) {
      const double w = omega(u[d], u[n + d], pr.params);
      if (w > best) best = w, x_front = s->support_point(static_cast<std::size_t>(d)).x();
    }
    // only intervals with a burning front inside the channel
    if (best < 1.0 || x_front <= 0.0 || x_front >= 60.0) continue;
    std::size_t finest = 0, near = 0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      if (static_cast<int>(mesh.cell(c).level) != top) continue;
      ++finest;
      if (std::abs(mesh.center(c).x() - x_front) <= 5.0) ++near;
    }
    const double frac = static_cast<double>(near) / static_cast<double>(finest);
    ++fs.intervals;
    fs.fractions.push_back(frac);
    if (frac < fs.worst) fs.worst = frac, fs.worst_interval = i;
  }
  return fs;
}

void check_adaptivity(const Problem& pr, const MeshPtr& base, const StudyResult& study, int loops) {
  MarkingConfig cfg;
  cfg.max_loops = loops;
  FrontStats last_front;
  const int base_level = base->max_level();
  const auto observer = [&](const LoopState& st) {
    note("adaptive loop " + std::to_string(st.record.loop) + ": M=" + std::to_string(st.record.intervals) +
        " cells=" + std::to_string(st.record.total_cells) + " dofs=" + std::to_string(st.record.primal_dofs) +
        " J=" + num(st.record.goal) + " error=" + num(*st.record.error) + " eta=" + num(st.record.eta));
    if (st.record.loop == loops) last_front = front_tracking(pr, st, base_level);
  };
  const auto records = adaptive_loop(pr, SpaceTimeMesh::uniform(base, TimePartition::uniform(pr.final_time, 256)),
                                     cfg, study.reference_goal, {}, observer);

  std::vector<std::pair<double, double>> global;
  for (const auto& row : study.rows) global.emplace_back(double(row.primal_dofs), std::abs(*row.error));
  bool below = true;
  std::string cmp;
  for (const auto& r : records) {
    if (r.loop < 2) continue;
    const double g = interpolate_loglog(global, double(r.primal_dofs));
    cmp += (cmp.empty() ? "" : ", ") + ("loop " + std::to_string(r.loop) + ": " + num(std::abs(*r.error)) + " vs " +
                                        num(g) + " at " + std::to_string(r.primal_dofs) + " dofs");
    below = below && std::abs(*r.error) < g;
  }
  report(below, "7a", "adaptive error below global curve from loop 2 [" + cmp + "]");

  bool growth = true;
  std::string g;
  for (std::size_t l = 1; l < records.size(); ++l) {
    const double m_ratio = double(records[l].intervals) / double(records[l - 1].intervals);
    const double n_ratio = (double(records[l].total_cells) / double(records[l].intervals)) /
                           (double(records[l - 1].total_cells) / double(records[l - 1].intervals));
    g += (g.empty() ? "" : ", ") + ("M x" + num(m_ratio) + " N x" + num(n_ratio));
    growth = growth && records[l].intervals * 2 == records[l - 1].intervals * 3 && n_ratio >= 1.6 && n_ratio <= 2.4;
  }
  report(growth, "7b", "growth per loop [" + g + "]: M exactly x1.5, mean N in [1.6, 2.4]x");

  auto fr = last_front.fractions;
  std::sort(fr.begin(), fr.end());
  const auto n_below = std::count_if(fr.begin(), fr.end(), [](double f) { return f < 0.6; });
  const double median = fr.empty() ? NAN : fr[fr.size() / 2];
  report(last_front.intervals > 0 && last_front.worst >= 0.6, "8",
         "finest cells within 5 of the reaction front: worst fraction " + num(last_front.worst) + " (interval " +
             std::to_string(last_front.worst_interval + 1) + ") over " + std::to_string(last_front.intervals) +
             " intervals with a burning front, >= 0.6 (" + std::to_string(n_below) + " below, median " + num(median) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int levels = 3, loops = 3;
  app.add_option("--levels", levels, "levels of the combustion study")->check(CLI::Range(2, 5));
  app.add_option("--loops", loops, "adaptive loops")->check(CLI::Range(2, 6));
  CLI11_PARSE(app, argc, argv);
  const auto start = std::chrono::steady_clock::now();

  const MeshPtr base = build_channel_geometry({});
  const Problem pr = combustion_problem({}, 60.0, mesh_area(*base));

  check_oracle();
  check_derivatives(pr, base);
  check_orthogonality(pr, base);
  check_heat();

  StudyOptions o;
  o.problem = pr;
  o.base = base;
  o.levels = levels;
  o.log = note;
  const StudyResult study = run_study(o);
  std::cerr << "J_ref = " << num(*study.reference_goal) << '\n';
  check_study(study);
  check_adaptivity(pr, base, study, loops);

  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria, " << num(minutes)
            << " min" << std::endl;
  return failures ? 1 : 0;
}
