// Command-line driver: solve, estimate, study and adapt runs configured by a
// sectioned key = value file.
#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "pudwr/adapt.hpp"
#include "pudwr/io.hpp"
#include "pudwr/study.hpp"

using namespace pudwr;

namespace {

void log_line(const std::string& s) { std::cerr << s << std::endl; }

std::function<void(std::size_t, std::size_t)> sweep_progress(const std::string& label) {
  return [label](std::size_t i, std::size_t m) {
    if ((i + 1) % std::max<std::size_t>(1, m / 8) == 0 || i + 1 == m)
      std::cerr << "  " << label << ' ' << (i + 1) << '/' << m << std::endl;
  };
}

SweepOptions sweep_options(const StudyConfig& cfg) {
  SweepOptions s;
  s.newton = cfg.newton;
  if (cfg.spill) s.store = SweepOptions::Store::disk;
  s.spill_dir = cfg.spill_dir;
  return s;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : "nan"; }

int run_solve(const StudyConfig& cfg, const Problem& pr, const MeshPtr& base) {
  const auto stm = SpaceTimeMesh::uniform(mesh_at_level(base, cfg.level),
                                          partition_at_level(pr.final_time, cfg.intervals, cfg.time_factor, cfg.level));
  SpaceCache cache;
  SweepOptions s = sweep_options(cfg);
  s.progress = sweep_progress("primal");
  const int order = primal_order(cfg.variants.front());
  const PrimalResult res = solve_primal(pr, stm, order, cache, s);
  std::cout << "J = " << format_number(res.goal) << '\n';
  if (pr.exact_goal) std::cout << "J_exact - J = " << format_number(*pr.exact_goal - res.goal) << '\n';

  CsvWriter csv(cfg.out / "solve.csv", {"M", "N", "order", "J", "J_exact_minus_J"});
  csv.row({CsvWriter::cell(stm.size()), CsvWriter::cell(stm.meshes[0]->n_cells()), std::to_string(order),
           format_number(res.goal), pr.exact_goal ? format_number(*pr.exact_goal - res.goal) : "nan"});
  const SpacePtr q1 = cache.get(stm.meshes[0], 1);
  write_vtk_mesh(cfg.out / "mesh_0.vtk", *q1);
  for (std::size_t i = 0; cfg.vtk_stride > 0 && i < stm.size(); ++i) {
    if (i % static_cast<std::size_t>(cfg.vtk_stride) != 0 && i + 1 != stm.size()) continue;
    const SpacePtr qi = cache.get(stm.meshes[i], 1);
    const Eigen::VectorXd u1 = transfer_pair(*res.trajectory.space(i), res.trajectory.load(i), *qi);
    write_vtk_fields(cfg.out / ("fields_" + std::to_string(i + 1) + ".vtk"), *qi, u1, nullptr, nullptr);
  }
  return 0;
}

int run_estimate(const StudyConfig& cfg, const Problem& pr, const MeshPtr& base) {
  const Variant v = cfg.variants.front();
  const auto stm = SpaceTimeMesh::uniform(mesh_at_level(base, cfg.level),
                                          partition_at_level(pr.final_time, cfg.intervals, cfg.time_factor, cfg.level));
  SpaceCache cache;
  SweepOptions s = sweep_options(cfg);
  s.progress = sweep_progress("primal");
  const PrimalResult u = solve_primal(pr, stm, primal_order(v), cache, s);
  s.progress = sweep_progress("adjoint");
  const Trajectory z = solve_adjoint(pr, stm, u.trajectory, adjoint_order(v), cache, s);
  const IndicatorField primal = evaluate_primal(pr, v, stm, u.trajectory, z, cache);
  const IndicatorField adjoint = evaluate_adjoint(pr, v, stm, u.trajectory, z, cache);
  const IndicatorField full = combine_full(primal, adjoint);

  std::cout << "J = " << format_number(u.goal) << "\neta = " << format_number(primal.eta())
            << "\neta_adj = " << format_number(adjoint.eta()) << "\neta_full = " << format_number(full.eta()) << '\n';
  CsvWriter csv(cfg.out / "estimate.csv",
                {"variant", "M", "N", "J", "eta_k", "eta_h", "eta_total", "eta_adj_k", "eta_adj_h", "eta_adj_total",
                 "eta_full"});
  csv.row({to_string(v), CsvWriter::cell(stm.size()), CsvWriter::cell(stm.meshes[0]->n_cells()),
           format_number(u.goal), format_number(primal.eta_k()), format_number(primal.eta_h()),
           format_number(primal.eta()), format_number(adjoint.eta_k()), format_number(adjoint.eta_h()),
           format_number(adjoint.eta()), format_number(full.eta())});
  CsvWriter per_interval(cfg.out / "indicators.csv", {"interval", "t", "eta_k_n", "eta_h_n", "eta_adj_n"});
  for (std::size_t i = 0; i < stm.size(); ++i)
    per_interval.row({CsvWriter::cell(i + 1), format_number(stm.partition.t(i + 1)),
                      format_number(primal.temporal_sum[i]), format_number(primal.spatial_sum[i]),
                      format_number(adjoint.temporal_sum[i] + adjoint.spatial_sum[i])});
  write_vtk_mesh(cfg.out / "mesh_0.vtk", *cache.get(stm.meshes[0], 1));
  for (std::size_t i = 0; cfg.vtk_stride > 0 && i < stm.size(); ++i) {
    if (i % static_cast<std::size_t>(cfg.vtk_stride) != 0 && i + 1 != stm.size()) continue;
    const SpacePtr qi = cache.get(stm.meshes[i], 1);
    const Eigen::VectorXd u1 = transfer_pair(*u.trajectory.space(i), u.trajectory.load(i), *qi);
    const Eigen::VectorXd eta = primal.combined(i);
    const Eigen::VectorXd eta_cell = cell_indicators(*qi, eta);
    write_vtk_fields(cfg.out / ("fields_" + std::to_string(i + 1) + ".vtk"), *qi, u1, &eta, &eta_cell);
  }
  return 0;
}

int run_study_mode(const StudyConfig& cfg, const Problem& pr, const MeshPtr& base) {
  StudyOptions o;
  o.problem = pr;
  o.base = base;
  o.base_intervals = cfg.intervals;
  o.time_factor = cfg.time_factor;
  o.levels = cfg.levels;
  o.variants = cfg.variants;
  o.reference_level = cfg.reference_level;
  o.sweep = sweep_options(cfg);
  o.log = log_line;
  CsvWriter csv(cfg.out / "table.csv",
                {"variant", "M", "N", "J_error_vs_ref", "eta_k", "eta_h", "eta_total", "eta_adj_total", "eta_full",
                 "I_eff", "J", "eta_adj_k", "eta_adj_h", "I_eff_adj", "I_eff_full", "loc_rel_primal",
                 "loc_rel_adjoint"});
  o.on_row = [&](const StudyRow& row) {
    for (const auto& e : row.estimates) {
      const auto eff = [&](double eta) -> std::string {
        return row.error ? format_number(effectivity(eta, *row.error)) : "nan";
      };
      csv.row({to_string(e.variant), CsvWriter::cell(row.intervals), CsvWriter::cell(row.cells),
               optional_cell(row.error), format_number(e.eta_k), format_number(e.eta_h), format_number(e.eta()),
               format_number(e.adjoint()), format_number(e.full()), eff(e.eta()), format_number(row.goal),
               format_number(e.adj_k), format_number(e.adj_h), eff(e.adjoint()), eff(e.full()),
               format_number(e.localization_primal), format_number(e.localization_adjoint)});
    }
  };
  const StudyResult res = run_study(o);
  if (res.reference_goal) std::cout << "J_ref = " << format_number(*res.reference_goal) << '\n';
  return 0;
}

int run_adapt_mode(const StudyConfig& cfg, const Problem& pr, const MeshPtr& base) {
  StudyOptions o;
  o.problem = pr;
  o.base = base;
  o.base_intervals = cfg.intervals;
  o.time_factor = cfg.time_factor;
  o.sweep = sweep_options(cfg);
  std::optional<double> ref = pr.exact_goal;
  if (!ref) {
    const int level = cfg.reference_level > 0 ? cfg.reference_level : cfg.levels + 1;
    log_line("reference run at level " + std::to_string(level));
    ref = reference_goal(o, level);
  }
  const auto stm = SpaceTimeMesh::uniform(mesh_at_level(base, cfg.level),
                                          partition_at_level(pr.final_time, cfg.intervals, cfg.time_factor, cfg.level));
  CsvWriter csv(cfg.out / "adapt.csv",
                {"loop", "M", "total_cells", "primal_dofs", "J", "error", "eta_k", "eta_h", "eta"});
  const auto observer = [&](const LoopState& st) {
    const AdaptRecord& r = st.record;
    log_line("loop " + std::to_string(r.loop) + ": M=" + std::to_string(r.intervals) +
             " dofs=" + std::to_string(r.primal_dofs) + " eta=" + format_number(r.eta));
    csv.row({std::to_string(r.loop), CsvWriter::cell(r.intervals), CsvWriter::cell(r.total_cells),
             CsvWriter::cell(r.primal_dofs), format_number(r.goal), optional_cell(r.error), format_number(r.eta_k),
             format_number(r.eta_h), format_number(r.eta)});
    if (cfg.vtk_stride <= 0) return;
    const std::string tag = std::to_string(r.loop);
    SpaceCache cache;
    for (std::size_t i = 0; i < st.stm.size(); i += static_cast<std::size_t>(cfg.vtk_stride)) {
      const SpacePtr qi = cache.get(st.stm.meshes[i], 1);
      const Eigen::VectorXd u1 = transfer_pair(*st.u.space(i), st.u.load(i), *qi);
      const Eigen::VectorXd eta = st.indicators.combined(i);
      const Eigen::VectorXd eta_cell = cell_indicators(*qi, eta);
      const std::string suffix = tag + "_" + std::to_string(i + 1) + ".vtk";
      write_vtk_mesh(cfg.out / ("mesh_" + suffix), *qi);
      write_vtk_fields(cfg.out / ("fields_" + suffix), *qi, u1, &eta, &eta_cell);
    }
  };
  adaptive_loop(pr, stm, cfg.marking, ref, sweep_options(cfg), observer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time PU-DWR error estimation for a low-Mach combustion model"};
  std::string config_path, variant, mode, out;
  int levels = 0, threads = 1;
  app.add_option("--config", config_path, "configuration file (sectioned key = value)");
  app.add_option("--variant", variant, "estimator variant")
      ->check(CLI::IsMember({"cg1cg1", "cg1cg2", "cg2cg2", "all"}));
  app.add_option("--levels", levels, "number of global refinement levels")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode, "run mode")->check(CLI::IsMember({"solve", "estimate", "study", "adapt"}));
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads (assembly is single threaded; accepted for compatibility)")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  StudyConfig cfg;
  try {
    Config c = config_path.empty() ? Config() : Config::load(config_path);
    if (!variant.empty()) c.set("run.variant", variant);
    if (levels > 0) c.set("run.levels", std::to_string(levels));
    if (!mode.empty()) c.set("run.mode", mode);
    if (!out.empty()) c.set("run.out", out);
    cfg = StudyConfig::from(c, !config_path.empty());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    std::filesystem::create_directories(cfg.out);
    const MeshPtr base = cfg.base_mesh();
    const Problem pr = cfg.make_problem(mesh_area(*base));
    if (cfg.mode == "solve") return run_solve(cfg, pr, base);
    if (cfg.mode == "estimate") return run_estimate(cfg, pr, base);
    if (cfg.mode == "study") return run_study_mode(cfg, pr, base);
    if (cfg.mode == "adapt") return run_adapt_mode(cfg, pr, base);
    std::cerr << "config error: unknown mode '" << cfg.mode << "'\n";
    return 2;
  } catch (const NewtonError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const AdaptError& e) {
    std::cerr << "solver failure: " << e.what() << " (" << e.records().size() << " loops completed)\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
