#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pudwr {

enum class BoundaryId : std::uint8_t { interior = 0, dirichlet = 1, robin = 2, neumann = 3 };

/// Set of boundary markers, one bit per BoundaryId.
class BoundaryMask {
 public:
  constexpr BoundaryMask() = default;
  constexpr BoundaryMask(std::initializer_list<BoundaryId> ids) {
    for (auto id : ids) bits_ |= bit(id);
  }
  constexpr bool contains(BoundaryId id) const { return (bits_ & bit(id)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }

 private:
  static constexpr std::uint8_t bit(BoundaryId id) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(id));
  }
  std::uint8_t bits_ = 0;
};

/// Root quadrilaterals. Vertices of each cell are listed counterclockwise
/// starting at the reference corner (0,0); faces are numbered
/// bottom (0), right (1), top (2), left (3).
///
/// All roots must share one orientation: the neighbor across face f meets
/// it with its face (f + 2) % 4.
struct CoarseMesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<std::array<int, 4>> neighbors;
  std::vector<std::array<BoundaryId, 4>> markers;

  /// Builds neighbor tables from shared vertex pairs and assigns a marker to
  /// every boundary face through `marker_of(cell, face)`. Throws
  /// std::invalid_argument for inconsistent orientation or non-convex cells.
  template <typename MarkerFn>
  static std::shared_ptr<const CoarseMesh> create(std::vector<Eigen::Vector2d> vertices,
                                                  std::vector<std::array<int, 4>> cells,
                                                  MarkerFn&& marker_of);

 private:
  void connect();
};

inline constexpr int kLatticeBits = 22;
inline constexpr int kMaxLevel = 15;
inline constexpr std::int64_t kLatticeSize = std::int64_t{1} << kLatticeBits;

/// Cell of the refinement forest: root id, level and integer position of the
/// cell in the 2^level x 2^level subdivision of its root.
struct CellKey {
  std::uint32_t root = 0;
  std::uint32_t level = 0;
  std::uint32_t ix = 0;
  std::uint32_t iy = 0;

  std::int64_t size() const { return kLatticeSize >> level; }
  CellKey parent() const { return {root, level - 1, ix / 2, iy / 2}; }
  CellKey child(unsigned a, unsigned b) const { return {root, level + 1, 2 * ix + a, 2 * iy + b}; }
  /// 0..3 as a + 2 b within the parent.
  unsigned child_index() const { return (ix & 1u) + 2u * (iy & 1u); }

  std::uint64_t pack() const;
  static CellKey unpack(std::uint64_t code);
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

/// Point of the root lattice, canonical among all roots sharing it.
struct NodeKey {
  std::uint32_t root = 0;
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const NodeKey&, const NodeKey&) = default;
  friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    std::uint64_t h = (std::uint64_t{k.root} << 50) ^ (static_cast<std::uint64_t>(k.x) << 25) ^
                      static_cast<std::uint64_t>(k.y);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

struct FaceNeighbor {
  enum class Kind { boundary, same, coarser, finer };
  Kind kind = Kind::boundary;
  /// Neighbor cell indices; two entries for `finer` (ordered along the face).
  std::array<std::size_t, 2> cells{};
  /// Level difference (neighbor level - own level).
  int level_offset = 0;
};

/// Active quadrilateral cells of one refinement of a coarse mesh. Cells are
/// stored in (root, Morton) order so that the four children of a parent are
/// consecutive. Immutable after construction.
class Mesh {
 public:
  Mesh(std::shared_ptr<const CoarseMesh> coarse, std::vector<CellKey> cells);

  static std::shared_ptr<const Mesh> uniform(std::shared_ptr<const CoarseMesh> coarse, int level);

  std::size_t n_cells() const { return codes_.size(); }
  CellKey cell(std::size_t c) const { return CellKey::unpack(codes_[c]); }
  std::span<const std::uint64_t> codes() const { return codes_; }
  const CoarseMesh& coarse() const { return *coarse_; }
  const std::shared_ptr<const CoarseMesh>& coarse_ptr() const { return coarse_; }
  std::uint64_t id() const { return id_; }
  int max_level() const;

  /// True if both meshes are the same refinement of the same coarse mesh.
  bool same_cells(const Mesh& other) const;

  Eigen::Vector2d map(std::size_t c, const Eigen::Vector2d& ref) const;
  Eigen::Matrix2d jacobian(std::size_t c, const Eigen::Vector2d& ref) const;
  Eigen::Vector2d point(const NodeKey& node) const;
  Eigen::Vector2d center(std::size_t c) const { return map(c, {0.5, 0.5}); }
  double area(std::size_t c) const;

  /// Lattice node of the local position (a/p, b/p) in cell c.
  NodeKey node(std::size_t c, int a, int b, int p) const;
  NodeKey canonical(std::uint32_t root, std::int64_t x, std::int64_t y) const;

  /// Active cell containing the lattice point of `root`; points on cell
  /// boundaries resolve to one of the adjacent cells.
  std::size_t locate(std::uint32_t root, std::int64_t x, std::int64_t y) const;
  std::size_t locate(const NodeKey& node) const { return locate(node.root, node.x, node.y); }
  /// Reference coordinates of a lattice point inside cell c.
  Eigen::Vector2d reference_coordinates(std::size_t c, const NodeKey& node) const;
  std::ptrdiff_t find(const CellKey& key) const;

  FaceNeighbor face_neighbor(std::size_t c, int face) const;
  BoundaryId face_marker(std::size_t c, int face) const;

  bool is_one_irregular() const;
  bool has_patch_structure() const;
  /// Groups of four siblings, children ordered as a + 2 b. Throws
  /// std::logic_error when the patch invariant does not hold.
  std::vector<std::array<std::size_t, 4>> patch_groups() const;

 private:
  std::shared_ptr<const CoarseMesh> coarse_;
  std::vector<std::uint64_t> codes_;
  std::uint64_t id_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Replaces every marked cell by its four children. Marking one cell of a
/// sibling group refines the whole group, and neighbors are refined until
/// adjacent levels differ by at most one.
MeshPtr refine(const Mesh& mesh, std::span<const std::size_t> marked);

struct ChannelGeometry {
  double length = 60.0;
  double height = 15.0;
  double notch_x0 = 15.0;
  double notch_x1 = 30.0;
  double notch_depth = 3.75;
  double initial_h = 0.9375;
};

/// Channel (0,length) x (0,height) with two rectangular recesses at the top
/// and bottom walls between notch_x0 and notch_x1. Inflow wall x = 0 is
/// Dirichlet, recess walls are Robin, everything else Neumann. The coarse
/// mesh has cells of size 2 initial_h; the returned mesh is its uniform
/// refinement, so every cell belongs to a 2x2 sibling patch.
MeshPtr build_channel_geometry(const ChannelGeometry& geometry);

/// Rectangle [x0,x1] x [y0,y1] with nx x ny roots; all boundary faces get
/// `marker`.
std::shared_ptr<const CoarseMesh> rectangle_coarse_mesh(double x0, double x1, double y0, double y1,
                                                        int nx, int ny, BoundaryId marker);

// ---------------------------------------------------------------------------

template <typename MarkerFn>
std::shared_ptr<const CoarseMesh> CoarseMesh::create(std::vector<Eigen::Vector2d> vertices,
                                                     std::vector<std::array<int, 4>> cells,
                                                     MarkerFn&& marker_of) {
  auto mesh = std::make_shared<CoarseMesh>();
  mesh->vertices = std::move(vertices);
  mesh->cells = std::move(cells);
  mesh->connect();
  for (std::size_t c = 0; c < mesh->cells.size(); ++c)
    for (int f = 0; f < 4; ++f)
      mesh->markers[c][f] =
          mesh->neighbors[c][f] < 0 ? marker_of(*mesh, c, f) : BoundaryId::interior;
  return mesh;
}

}  // namespace pudwr
