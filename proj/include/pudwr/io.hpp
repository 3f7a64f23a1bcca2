#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pudwr/adapt.hpp"
#include "pudwr/estimator.hpp"

namespace pudwr {

/// Configuration problems; `line` is 0 when the error is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        key_(std::move(key)) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

/// Flat sectioned key = value text. Keys are addressed as "section.key";
/// '#' and ';' start comments.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  long get_int(const std::string& key, long fallback);
  bool get_bool(const std::string& key, bool fallback);
  /// Throws ConfigError naming the key when it is absent.
  std::string require_string(const std::string& key);
  /// Keys never read; reported as errors by StudyConfig.
  std::vector<std::string> unused() const;
  int line_of(const std::string& key) const;
  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

 private:
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

struct StudyConfig {
  std::string problem = "combustion";  // combustion | heat | heat_linear
  std::string mode = "study";          // solve | estimate | study | adapt
  ChannelGeometry geometry;
  ModelParams params;
  double final_time = 60.0;
  std::size_t intervals = 256;
  /// Roots per side of the unit square for the heat problems.
  int square_roots = 2;
  std::vector<Variant> variants{Variant::cg1_cg1, Variant::cg1_cg2, Variant::cg2_cg2};
  int levels = 3;
  /// Level of the reference run; 0 means levels + 1. Ignored when the goal
  /// is known in closed form.
  int reference_level = 0;
  /// Refinement factor of the time step per level (2 halves k with h).
  int time_factor = 2;
  /// Level used by solve/estimate/adapt.
  int level = 1;
  std::filesystem::path out = "out";
  MarkingConfig marking;
  bool spill = false;
  std::filesystem::path spill_dir;
  /// Write VTK fields for every n-th interval (0 disables).
  int vtk_stride = 16;
  NewtonSettings newton;

  /// Reads all keys (unknown keys are errors; `run.problem` is required
  /// when a file is given).
  static StudyConfig from(Config& config, bool require_problem);
  Problem make_problem(double domain_measure) const;
  /// Base (level 1) mesh of the configured problem.
  MeshPtr base_mesh() const;
};

/// Number formatting used by every output file: 9 significant digits.
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

 private:
  std::ofstream stream_;
  std::size_t columns_;
};

/// Legacy ASCII VTK 3.0 unstructured grid of the cG(1) nodes of a mesh.
void write_vtk_mesh(const std::filesystem::path& path, const FESpace& q1);
/// Mesh plus point data (theta, Y, eta) and cell data (eta_cell).
void write_vtk_fields(const std::filesystem::path& path, const FESpace& q1, const Eigen::VectorXd& u1,
                      const Eigen::VectorXd* eta, const Eigen::VectorXd* eta_cell);

/// Area of the region covered by a mesh.
double mesh_area(const Mesh& mesh);

}  // namespace pudwr
