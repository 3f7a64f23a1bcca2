#include "pudwr/mesh.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pudwr {

namespace {

std::uint64_t spread_bits(std::uint64_t x) {
  x &= 0x3fffffULL;
  x = (x | (x << 16)) & 0x0000ffff0000ffffULL;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffULL;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0fULL;
  x = (x | (x << 2)) & 0x3333333333333333ULL;
  x = (x | (x << 1)) & 0x5555555555555555ULL;
  return x;
}

std::uint64_t compact_bits(std::uint64_t x) {
  x &= 0x5555555555555555ULL;
  x = (x | (x >> 1)) & 0x3333333333333333ULL;
  x = (x | (x >> 2)) & 0x0f0f0f0f0f0f0f0fULL;
  x = (x | (x >> 4)) & 0x00ff00ff00ff00ffULL;
  x = (x | (x >> 8)) & 0x0000ffff0000ffffULL;
  x = (x | (x >> 16)) & 0x00000000ffffffffULL;
  return x;
}

std::uint64_t morton(std::int64_t x, std::int64_t y) {
  return spread_bits(static_cast<std::uint64_t>(x)) |
         (spread_bits(static_cast<std::uint64_t>(y)) << 1);
}

std::atomic<std::uint64_t> next_mesh_id{1};

Eigen::Vector2d root_map(const CoarseMesh& coarse, std::uint32_t root, double s, double t) {
  const auto& v = coarse.cells[root];
  return (1 - s) * (1 - t) * coarse.vertices[v[0]] + s * (1 - t) * coarse.vertices[v[1]] +
         s * t * coarse.vertices[v[2]] + (1 - s) * t * coarse.vertices[v[3]];
}

Eigen::Matrix2d root_jacobian(const CoarseMesh& coarse, std::uint32_t root, double s, double t) {
  const auto& v = coarse.cells[root];
  const auto& p0 = coarse.vertices[v[0]];
  const auto& p1 = coarse.vertices[v[1]];
  const auto& p2 = coarse.vertices[v[2]];
  const auto& p3 = coarse.vertices[v[3]];
  Eigen::Matrix2d jac;
  jac.col(0) = (1 - t) * (p1 - p0) + t * (p2 - p3);
  jac.col(1) = (1 - s) * (p3 - p0) + s * (p2 - p1);
  return jac;
}

}  // namespace

// ---------------------------------------------------------------------------
// CoarseMesh

void CoarseMesh::connect() {
  const auto n = cells.size();
  if (n >= (1u << 16)) throw std::invalid_argument("coarse mesh: at most 65535 root cells");
  neighbors.assign(n, {-1, -1, -1, -1});
  markers.assign(n, {BoundaryId::interior, BoundaryId::interior, BoundaryId::interior,
                     BoundaryId::interior});
  std::map<std::pair<int, int>, std::pair<int, int>> faces;
  for (std::size_t c = 0; c < n; ++c) {
    const auto& v = cells[c];
    for (int k = 0; k < 4; ++k) {
      const Eigen::Vector2d e1 = vertices[v[(k + 1) % 4]] - vertices[v[k]];
      const Eigen::Vector2d e2 = vertices[v[(k + 3) % 4]] - vertices[v[k]];
      if (e1.x() * e2.y() - e1.y() * e2.x() <= 0)
        throw std::invalid_argument("coarse mesh: cell " + std::to_string(c) +
                                    " is not a convex counterclockwise quadrilateral");
    }
    for (int f = 0; f < 4; ++f) {
      const int a = v[f];
      const int b = v[(f + 1) % 4];
      auto it = faces.find({b, a});
      if (it != faces.end()) {
        const auto [other, other_face] = it->second;
        if (other_face != (f + 2) % 4)
          throw std::invalid_argument("coarse mesh: cells " + std::to_string(c) + " and " +
                                      std::to_string(other) +
                                      " do not share a consistent orientation");
        neighbors[c][f] = other;
        neighbors[other][other_face] = static_cast<int>(c);
        faces.erase(it);
      } else {
        if (!faces.emplace(std::pair{a, b}, std::pair{static_cast<int>(c), f}).second)
          throw std::invalid_argument("coarse mesh: face shared by more than two cells");
      }
    }
  }
}

std::shared_ptr<const CoarseMesh> rectangle_coarse_mesh(double x0, double x1, double y0, double y1,
                                                        int nx, int ny, BoundaryId marker) {
  if (nx < 1 || ny < 1 || !(x1 > x0) || !(y1 > y0))
    throw std::invalid_argument("rectangle_coarse_mesh: invalid extent or subdivision");
  std::vector<Eigen::Vector2d> vertices;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vertices.emplace_back(x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny);
  std::vector<std::array<int, 4>> cells;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v0 = j * (nx + 1) + i;
      cells.push_back({v0, v0 + 1, v0 + nx + 2, v0 + nx + 1});
    }
  return CoarseMesh::create(std::move(vertices), std::move(cells),
                            [marker](const CoarseMesh&, std::size_t, int) { return marker; });
}

// ---------------------------------------------------------------------------
// CellKey

std::uint64_t CellKey::pack() const {
  const std::int64_t s = size();
  return (std::uint64_t{root} << 48) | (morton(ix * s, iy * s) << 4) | level;
}

CellKey CellKey::unpack(std::uint64_t code) {
  CellKey key;
  key.level = static_cast<std::uint32_t>(code & 0xf);
  key.root = static_cast<std::uint32_t>(code >> 48);
  const std::uint64_t m = (code >> 4) & ((std::uint64_t{1} << 44) - 1);
  const int shift = kLatticeBits - static_cast<int>(key.level);
  key.ix = static_cast<std::uint32_t>(compact_bits(m) >> shift);
  key.iy = static_cast<std::uint32_t>(compact_bits(m >> 1) >> shift);
  return key;
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(std::shared_ptr<const CoarseMesh> coarse, std::vector<CellKey> cells)
    : coarse_(std::move(coarse)), id_(next_mesh_id++) {
  codes_.reserve(cells.size());
  for (const auto& key : cells) {
    if (key.root >= coarse_->cells.size()) throw std::invalid_argument("mesh: unknown root cell");
    if (key.level > static_cast<std::uint32_t>(kMaxLevel))
      throw std::invalid_argument("mesh: refinement level exceeds " + std::to_string(kMaxLevel));
    codes_.push_back(key.pack());
  }
  std::sort(codes_.begin(), codes_.end());
  codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
}

MeshPtr Mesh::uniform(std::shared_ptr<const CoarseMesh> coarse, int level) {
  std::vector<CellKey> cells;
  const std::uint32_t n = 1u << level;
  for (std::uint32_t r = 0; r < coarse->cells.size(); ++r)
    for (std::uint32_t j = 0; j < n; ++j)
      for (std::uint32_t i = 0; i < n; ++i)
        cells.push_back({r, static_cast<std::uint32_t>(level), i, j});
  return std::make_shared<const Mesh>(std::move(coarse), std::move(cells));
}

int Mesh::max_level() const {
  int level = 0;
  for (auto code : codes_) level = std::max(level, static_cast<int>(code & 0xf));
  return level;
}

bool Mesh::same_cells(const Mesh& other) const {
  return this == &other || (coarse_ == other.coarse_ && codes_ == other.codes_);
}

Eigen::Vector2d Mesh::map(std::size_t c, const Eigen::Vector2d& ref) const {
  const CellKey key = cell(c);
  const double scale = 1.0 / static_cast<double>(1u << key.level);
  return root_map(*coarse_, key.root, (key.ix + ref.x()) * scale, (key.iy + ref.y()) * scale);
}

Eigen::Matrix2d Mesh::jacobian(std::size_t c, const Eigen::Vector2d& ref) const {
  const CellKey key = cell(c);
  const double scale = 1.0 / static_cast<double>(1u << key.level);
  return scale *
         root_jacobian(*coarse_, key.root, (key.ix + ref.x()) * scale, (key.iy + ref.y()) * scale);
}

Eigen::Vector2d Mesh::point(const NodeKey& node) const {
  const double inv = 1.0 / static_cast<double>(kLatticeSize);
  return root_map(*coarse_, node.root, node.x * inv, node.y * inv);
}

double Mesh::area(std::size_t c) const {
  // Two-point Gauss is exact for the bilinear determinant.
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  double a = 0;
  for (double s : g)
    for (double t : g) a += 0.25 * jacobian(c, {s, t}).determinant();
  return a;
}

NodeKey Mesh::node(std::size_t c, int a, int b, int p) const {
  const CellKey key = cell(c);
  const std::int64_t s = key.size();
  return canonical(key.root, key.ix * s + a * s / p, key.iy * s + b * s / p);
}

NodeKey Mesh::canonical(std::uint32_t root, std::int64_t x, std::int64_t y) const {
  NodeKey best{root, x, y};
  if (x > 0 && x < kLatticeSize && y > 0 && y < kLatticeSize) return best;
  // Enumerate every root representation of the point and keep the smallest.
  std::array<NodeKey, 8> seen{};
  std::size_t n_seen = 0;
  std::array<NodeKey, 8> stack{};
  std::size_t top = 0;
  stack[top++] = best;
  seen[n_seen++] = best;
  while (top > 0) {
    const NodeKey k = stack[--top];
    const auto& nb = coarse_->neighbors[k.root];
    const auto visit = [&](int r, std::int64_t nx, std::int64_t ny) {
      if (r < 0) return;
      const NodeKey cand{static_cast<std::uint32_t>(r), nx, ny};
      for (std::size_t i = 0; i < n_seen; ++i)
        if (seen[i] == cand) return;
      if (n_seen == seen.size()) return;
      seen[n_seen++] = cand;
      stack[top++] = cand;
      if (cand < best) best = cand;
    };
    if (k.x == 0) visit(nb[3], kLatticeSize, k.y);
    if (k.x == kLatticeSize) visit(nb[1], 0, k.y);
    if (k.y == 0) visit(nb[0], k.x, kLatticeSize);
    if (k.y == kLatticeSize) visit(nb[2], k.x, 0);
  }
  return best;
}

std::size_t Mesh::locate(std::uint32_t root, std::int64_t x, std::int64_t y) const {
  x = std::clamp<std::int64_t>(x, 0, kLatticeSize - 1);
  y = std::clamp<std::int64_t>(y, 0, kLatticeSize - 1);
  const std::uint64_t probe = (std::uint64_t{root} << 48) | (morton(x, y) << 4) | 0xf;
  auto it = std::upper_bound(codes_.begin(), codes_.end(), probe);
  if (it == codes_.begin()) throw std::out_of_range("mesh: point not covered by any cell");
  --it;
  const std::size_t c = static_cast<std::size_t>(it - codes_.begin());
  const CellKey key = cell(c);
  const std::int64_t s = key.size();
  if (key.root != root || x < key.ix * s || x >= (key.ix + 1) * s || y < key.iy * s ||
      y >= (key.iy + 1) * s)
    throw std::out_of_range("mesh: point not covered by any cell");
  return c;
}

Eigen::Vector2d Mesh::reference_coordinates(std::size_t c, const NodeKey& node) const {
  const CellKey key = cell(c);
  const double s = static_cast<double>(key.size());
  if (node.root != key.root) throw std::logic_error("mesh: node and cell belong to different roots");
  return {(node.x - key.ix * key.size()) / s, (node.y - key.iy * key.size()) / s};
}

std::ptrdiff_t Mesh::find(const CellKey& key) const {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), key.pack());
  if (it == codes_.end() || *it != key.pack()) return -1;
  return it - codes_.begin();
}

namespace {

// Same-level neighbor across a face; may live in an adjacent root.
bool same_level_neighbor(const CoarseMesh& coarse, const CellKey& key, int face, CellKey& out) {
  const std::uint32_t n = 1u << key.level;
  out = key;
  switch (face) {
    case 0:
      if (key.iy > 0) { --out.iy; return true; }
      break;
    case 1:
      if (key.ix + 1 < n) { ++out.ix; return true; }
      break;
    case 2:
      if (key.iy + 1 < n) { ++out.iy; return true; }
      break;
    default:
      if (key.ix > 0) { --out.ix; return true; }
      break;
  }
  const int r = coarse.neighbors[key.root][face];
  if (r < 0) return false;
  out.root = static_cast<std::uint32_t>(r);
  switch (face) {
    case 0: out.iy = n - 1; break;
    case 1: out.ix = 0; break;
    case 2: out.iy = 0; break;
    default: out.ix = n - 1; break;
  }
  return true;
}

}  // namespace

FaceNeighbor Mesh::face_neighbor(std::size_t c, int face) const {
  const CellKey key = cell(c);
  FaceNeighbor result;
  CellKey nb;
  if (!same_level_neighbor(*coarse_, key, face, nb)) return result;
  const std::int64_t s = nb.size();
  const std::size_t hit = locate(nb.root, nb.ix * s + s / 2, nb.iy * s + s / 2);
  const CellKey found = cell(hit);
  result.level_offset = static_cast<int>(found.level) - static_cast<int>(key.level);
  if (result.level_offset == 0) {
    result.kind = FaceNeighbor::Kind::same;
    result.cells[0] = hit;
    return result;
  }
  if (result.level_offset < 0) {
    result.kind = FaceNeighbor::Kind::coarser;
    result.cells[0] = hit;
    return result;
  }
  // Finer: the two children of nb touching the shared face.
  result.kind = FaceNeighbor::Kind::finer;
  const int opposite = (face + 2) % 4;
  std::array<std::pair<unsigned, unsigned>, 2> kids;
  switch (opposite) {
    case 0: kids = {{{0, 0}, {1, 0}}}; break;
    case 1: kids = {{{1, 0}, {1, 1}}}; break;
    case 2: kids = {{{0, 1}, {1, 1}}}; break;
    default: kids = {{{0, 0}, {0, 1}}}; break;
  }
  int offset = 1;
  for (int i = 0; i < 2; ++i) {
    const CellKey child = nb.child(kids[i].first, kids[i].second);
    const std::int64_t cs = child.size();
    const std::size_t h = locate(child.root, child.ix * cs + cs / 2, child.iy * cs + cs / 2);
    result.cells[i] = h;
    offset = std::max(offset, static_cast<int>(cell(h).level) - static_cast<int>(key.level));
  }
  result.level_offset = offset;
  return result;
}

BoundaryId Mesh::face_marker(std::size_t c, int face) const {
  const CellKey key = cell(c);
  const std::uint32_t n = 1u << key.level;
  const bool on_root_face = (face == 0 && key.iy == 0) || (face == 1 && key.ix + 1 == n) ||
                            (face == 2 && key.iy + 1 == n) || (face == 3 && key.ix == 0);
  if (!on_root_face) return BoundaryId::interior;
  return coarse_->markers[key.root][face];
}

bool Mesh::is_one_irregular() const {
  for (std::size_t c = 0; c < n_cells(); ++c)
    for (int f = 0; f < 4; ++f) {
      const auto nb = face_neighbor(c, f);
      if (std::abs(nb.level_offset) > 1) return false;
    }
  return true;
}

bool Mesh::has_patch_structure() const {
  const std::size_t n = n_cells();
  if (n % 4 != 0) return false;
  for (std::size_t c = 0; c < n; c += 4) {
    const CellKey first = cell(c);
    if (first.level == 0 || first.child_index() != 0) return false;
    const CellKey parent = first.parent();
    for (unsigned i = 1; i < 4; ++i) {
      const CellKey k = cell(c + i);
      if (k.level != first.level || k.child_index() != i || !(k.parent() == parent)) return false;
    }
  }
  return true;
}

std::vector<std::array<std::size_t, 4>> Mesh::patch_groups() const {
  if (!has_patch_structure())
    throw std::logic_error("mesh: cells do not form complete 2x2 sibling patches");
  std::vector<std::array<std::size_t, 4>> groups;
  groups.reserve(n_cells() / 4);
  for (std::size_t c = 0; c < n_cells(); c += 4) groups.push_back({c, c + 1, c + 2, c + 3});
  return groups;
}

// ---------------------------------------------------------------------------

MeshPtr refine(const Mesh& mesh, std::span<const std::size_t> marked) {
  const std::size_t n = mesh.n_cells();
  std::vector<char> flag(n, 0);
  std::vector<std::size_t> work;
  const auto push = [&](std::size_t c) {
    if (flag[c]) return;
    flag[c] = 1;
    work.push_back(c);
  };
  const auto push_with_siblings = [&](std::size_t c) {
    push(c);
    const CellKey key = mesh.cell(c);
    if (key.level == 0) return;
    const CellKey parent = key.parent();
    for (unsigned b = 0; b < 2; ++b)
      for (unsigned a = 0; a < 2; ++a) {
        const auto s = mesh.find(parent.child(a, b));
        if (s >= 0) push(static_cast<std::size_t>(s));
      }
  };
  for (auto c : marked) {
    if (c >= n) throw std::out_of_range("refine: marked cell index out of range");
    push_with_siblings(c);
  }
  while (!work.empty()) {
    const std::size_t c = work.back();
    work.pop_back();
    for (int f = 0; f < 4; ++f) {
      const auto nb = mesh.face_neighbor(c, f);
      if (nb.kind == FaceNeighbor::Kind::coarser) push_with_siblings(nb.cells[0]);
    }
  }
  std::vector<CellKey> cells;
  cells.reserve(n + 3 * static_cast<std::size_t>(std::count(flag.begin(), flag.end(), 1)));
  for (std::size_t c = 0; c < n; ++c) {
    const CellKey key = mesh.cell(c);
    if (!flag[c]) {
      cells.push_back(key);
      continue;
    }
    if (static_cast<int>(key.level) + 1 > kMaxLevel)
      throw std::length_error("refine: maximum refinement level reached");
    for (unsigned b = 0; b < 2; ++b)
      for (unsigned a = 0; a < 2; ++a) cells.push_back(key.child(a, b));
  }
  return std::make_shared<const Mesh>(mesh.coarse_ptr(), std::move(cells));
}

MeshPtr build_channel_geometry(const ChannelGeometry& g) {
  if (!(g.initial_h > 0)) throw std::invalid_argument("channel: initial_h must be positive");
  if (!(g.notch_x0 > 0 && g.notch_x0 < g.notch_x1 && g.notch_x1 < g.length))
    throw std::invalid_argument("channel: need 0 < notch_x0 < notch_x1 < length");
  if (!(g.notch_depth >= 0 && 2 * g.notch_depth < g.height))
    throw std::invalid_argument("channel: need 0 <= 2 notch_depth < height");
  const double root_h = 2 * g.initial_h;
  const auto count = [&](double len, const char* what) {
    const double q = len / root_h;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * std::max(1.0, q))
      throw std::invalid_argument(std::string("channel: ") + what + " = " + std::to_string(len) +
                                  " is not a multiple of 2 initial_h = " +
                                  std::to_string(root_h) +
                                  " (all-quad patch decomposition impossible)");
    return static_cast<int>(r);
  };
  const int nx = count(g.length, "length");
  const int ny = count(g.height, "height");
  const int i0 = count(g.notch_x0, "notch_x0");
  const int i1 = count(g.notch_x1, "notch_x1");
  const int jd = count(g.notch_depth, "notch_depth");

  const auto in_notch = [&](int i, int j) {
    return i >= i0 && i < i1 && (j < jd || j >= ny - jd);
  };
  const auto inside = [&](int i, int j) {
    return i >= 0 && i < nx && j >= 0 && j < ny && !in_notch(i, j);
  };

  std::vector<int> vertex_id((nx + 1) * (ny + 1), -1);
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<std::pair<int, int>> cell_ij;
  const auto vid = [&](int i, int j) {
    int& id = vertex_id[j * (nx + 1) + i];
    if (id < 0) {
      id = static_cast<int>(vertices.size());
      vertices.emplace_back(i * root_h, j * root_h);
    }
    return id;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!inside(i, j)) continue;
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      cell_ij.emplace_back(i, j);
    }
  auto coarse = CoarseMesh::create(
      std::move(vertices), std::move(cells), [&](const CoarseMesh&, std::size_t c, int f) {
        const auto [i, j] = cell_ij[c];
        if (f == 3 && i == 0) return BoundaryId::dirichlet;
        const int ni = i + (f == 1) - (f == 3);
        const int nj = j + (f == 2) - (f == 0);
        if (ni >= 0 && ni < nx && nj >= 0 && nj < ny && in_notch(ni, nj)) return BoundaryId::robin;
        return BoundaryId::neumann;
      });
  return Mesh::uniform(std::move(coarse), 1);
}

}  // namespace pudwr
