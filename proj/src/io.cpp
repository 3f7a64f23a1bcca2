#include "pudwr/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pudwr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto comment = raw.find_first_of("#;");
    const std::string s = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError("malformed section header '" + s + "'", line);
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + s + "'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    if (section.empty()) throw ConfigError("key '" + key + "' outside of a [section]", line);
    const std::string full = section + "." + key;
    if (cfg.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'", line, full);
    cfg.entries_[full] = {value, line};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

int Config::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  used_.insert(key);
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

double Config::get_double(const std::string& key, double fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const std::string v = get_string(key, "");
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'", line_of(key), key);
  }
}

long Config::get_int(const std::string& key, long fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const std::string v = get_string(key, "");
  try {
    std::size_t pos = 0;
    const long i = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'", line_of(key), key);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  std::string v = get_string(key, "");
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'", line_of(key), key);
}

std::string Config::require_string(const std::string& key) {
  if (!has(key)) throw ConfigError("missing config key '" + key + "'", 0, key);
  return get_string(key, "");
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_)
    if (!used_.count(key)) out.push_back(key);
  return out;
}

StudyConfig StudyConfig::from(Config& c, bool require_problem) {
  StudyConfig s;
  s.problem = require_problem ? c.require_string("run.problem") : c.get_string("run.problem", s.problem);
  if (s.problem != "combustion" && s.problem != "heat" && s.problem != "heat_linear")
    throw ConfigError("unknown problem '" + s.problem + "'", c.line_of("run.problem"), "run.problem");
  s.mode = c.get_string("run.mode", s.mode);
  const std::string variant = c.get_string("run.variant", "all");
  if (variant != "all") {
    try {
      s.variants = {parse_variant(variant)};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), c.line_of("run.variant"), "run.variant");
    }
  }
  s.levels = static_cast<int>(c.get_int("run.levels", s.levels));
  s.reference_level = static_cast<int>(c.get_int("run.reference_level", s.reference_level));
  s.level = static_cast<int>(c.get_int("run.level", s.level));
  s.out = c.get_string("run.out", s.out.string());
  s.vtk_stride = static_cast<int>(c.get_int("run.vtk_stride", s.vtk_stride));
  s.spill = c.get_bool("run.spill", s.spill);
  s.spill_dir = c.get_string("run.spill_dir", "");

  auto& g = s.geometry;
  g.length = c.get_double("geometry.length", g.length);
  g.height = c.get_double("geometry.height", g.height);
  g.notch_x0 = c.get_double("geometry.notch_x0", g.notch_x0);
  g.notch_x1 = c.get_double("geometry.notch_x1", g.notch_x1);
  g.notch_depth = c.get_double("geometry.notch_depth", g.notch_depth);
  g.initial_h = c.get_double("geometry.initial_h", g.initial_h);
  s.square_roots = static_cast<int>(c.get_int("geometry.square_roots", s.square_roots));

  auto& p = s.params;
  p.Le = c.get_double("model.Le", p.Le);
  p.alpha = c.get_double("model.alpha", p.alpha);
  p.beta = c.get_double("model.beta", p.beta);
  p.robin_k = c.get_double("model.robin_k", p.robin_k);
  p.denom_floor = c.get_double("model.denom_floor", p.denom_floor);
  if (!(p.Le > 0)) throw ConfigError("model.Le must be positive", c.line_of("model.Le"), "model.Le");

  s.final_time = c.get_double("time.T", s.final_time);
  s.intervals = static_cast<std::size_t>(c.get_int("time.M", static_cast<long>(s.intervals)));
  if (c.has("time.k")) {
    const double k = c.get_double("time.k", 0.0);
    if (std::abs(k * static_cast<double>(s.intervals) - s.final_time) > 1e-9 * s.final_time)
      throw ConfigError("time.k * time.M must equal time.T", c.line_of("time.k"), "time.k");
  }
  s.time_factor = static_cast<int>(c.get_int("time.time_factor", s.time_factor));

  s.marking.time_fraction = c.get_double("adapt.time_fraction", s.marking.time_fraction);
  s.marking.space_fraction = c.get_double("adapt.space_fraction", s.marking.space_fraction);
  s.marking.max_loops = static_cast<int>(c.get_int("adapt.max_loops", s.marking.max_loops));
  s.marking.tolerance = c.get_double("adapt.tolerance", s.marking.tolerance);

  s.newton.abs_tol = c.get_double("newton.abs_tol", s.newton.abs_tol);
  s.newton.rel_tol = c.get_double("newton.rel_tol", s.newton.rel_tol);
  s.newton.max_iter = static_cast<int>(c.get_int("newton.max_iter", s.newton.max_iter));
  s.newton.max_halvings = static_cast<int>(c.get_int("newton.max_halvings", s.newton.max_halvings));

  if (const auto extra = c.unused(); !extra.empty())
    throw ConfigError("unknown config key '" + extra.front() + "'", c.line_of(extra.front()), extra.front());
  if (s.levels < 1 || s.level < 1) throw ConfigError("levels must be at least 1");
  if (s.intervals == 0 || !(s.final_time > 0)) throw ConfigError("time.T and time.M must be positive");
  for (double f : {s.marking.time_fraction, s.marking.space_fraction})
    if (!(f >= 0 && f <= 1)) throw ConfigError("marking fractions must lie in [0,1]");
  return s;
}

Problem StudyConfig::make_problem(double domain_measure) const {
  if (problem == "heat") return heat_problem(final_time);
  if (problem == "heat_linear") return heat_linear_problem(final_time);
  return combustion_problem(params, final_time, domain_measure);
}

MeshPtr StudyConfig::base_mesh() const {
  if (problem == "combustion") return build_channel_geometry(geometry);
  return Mesh::uniform(rectangle_coarse_mesh(0, 1, 0, 1, square_roots, square_roots, BoundaryId::dirichlet), 1);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : stream_(path, std::ios::trunc), columns_(header.size()) {
  if (!stream_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("CsvWriter: wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) stream_ << (i ? "," : "") << cells[i];
  stream_ << '\n';
  stream_.flush();
}

namespace {

void write_grid(std::ostream& out, const FESpace& q1) {
  if (q1.order() != 1) throw std::invalid_argument("VTK output expects a cG(1) space");
  const Mesh& mesh = q1.mesh();
  out << "# vtk DataFile Version 3.0\npudwr\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << q1.n_dofs() << " double\n";
  for (std::size_t d = 0; d < q1.n_dofs(); ++d) {
    const Eigen::Vector2d x = q1.support_point(d);
    out << format_number(x.x()) << ' ' << format_number(x.y()) << " 0\n";
  }
  out << "CELLS " << mesh.n_cells() << ' ' << 5 * mesh.n_cells() << '\n';
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto d = q1.cell_dofs(c);
    out << "4 " << d[0] << ' ' << d[1] << ' ' << d[3] << ' ' << d[2] << '\n';
  }
  out << "CELL_TYPES " << mesh.n_cells() << '\n';
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) out << "9\n";
}

void write_scalars(std::ostream& out, const std::string& name, const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_number(v[i]) << '\n';
}

}  // namespace

void write_vtk_mesh(const std::filesystem::path& path, const FESpace& q1) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_grid(out, q1);
  Eigen::VectorXd level(q1.mesh().n_cells());
  for (std::size_t c = 0; c < q1.mesh().n_cells(); ++c) level[c] = q1.mesh().cell(c).level;
  out << "CELL_DATA " << level.size() << '\n';
  write_scalars(out, "level", level);
}

void write_vtk_fields(const std::filesystem::path& path, const FESpace& q1, const Eigen::VectorXd& u1,
                      const Eigen::VectorXd* eta, const Eigen::VectorXd* eta_cell) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_grid(out, q1);
  const auto n = static_cast<Eigen::Index>(q1.n_dofs());
  if (u1.size() != 2 * n) throw std::invalid_argument("write_vtk_fields: solution size mismatch");
  out << "POINT_DATA " << n << '\n';
  write_scalars(out, "theta", u1.head(n));
  write_scalars(out, "Y", u1.tail(n));
  if (eta) write_scalars(out, "eta", *eta);
  if (eta_cell) {
    out << "CELL_DATA " << eta_cell->size() << '\n';
    write_scalars(out, "eta_cell", *eta_cell);
  }
}

double mesh_area(const Mesh& mesh) {
  double a = 0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) a += mesh.area(c);
  return a;
}

}  // namespace pudwr
