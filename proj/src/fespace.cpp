#include "pudwr/fespace.hpp"

#include <array>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/LU>

namespace pudwr {

namespace {

// Local node (a, b) of the t-th node along face f for order p.
std::pair<int, int> face_node(int face, int t, int p) {
  switch (face) {
    case 0: return {t, 0};
    case 1: return {p, t};
    case 2: return {t, p};
    default: return {0, t};
  }
}

// Values of the Q1 shape functions at the Q2 nodes: row = Q2 node, col = Q1 node.
const Eigen::Matrix<double, 9, 4>& q1_at_q2_nodes() {
  static const Eigen::Matrix<double, 9, 4> table = [] {
    Eigen::Matrix<double, 9, 4> m;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        for (int b = 0; b < 2; ++b)
          for (int a = 0; a < 2; ++a)
            m(i + 3 * j, a + 2 * b) = lagrange(1, a, 0.5 * i) * lagrange(1, b, 0.5 * j);
    return m;
  }();
  return table;
}

void require_same_mesh(const FESpace& a, const FESpace& b, const char* what) {
  if (!a.mesh().same_cells(b.mesh()))
    throw std::invalid_argument(std::string(what) + ": spaces live on different meshes");
}

}  // namespace

// ---------------------------------------------------------------------------
// FESpace

FESpace::FESpace(MeshPtr mesh, int order) : mesh_(std::move(mesh)), order_(order) {
  if (order_ != 1 && order_ != 2) throw std::invalid_argument("FESpace: order must be 1 or 2");
  const int p = order_;
  const int nloc = dofs_per_cell();
  const std::size_t n_cells = mesh_->n_cells();
  cell_dofs_.resize(n_cells * nloc);
  std::unordered_map<NodeKey, int, NodeKeyHash> index;
  index.reserve(n_cells * p * p + 16);
  const auto dof_of = [&](const NodeKey& key) {
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(nodes_.size()));
    if (inserted) nodes_.push_back(key);
    return it->second;
  };
  for (std::size_t c = 0; c < n_cells; ++c)
    for (int b = 0; b <= p; ++b)
      for (int a = 0; a <= p; ++a) cell_dofs_[c * nloc + a + (p + 1) * b] = dof_of(mesh_->node(c, a, b, p));

  boundary_bits_.assign(nodes_.size(), 0);
  std::map<int, std::vector<MasterEntry>> raw;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto dofs = cell_dofs(c);
    for (int f = 0; f < 4; ++f) {
      const BoundaryId marker = mesh_->face_marker(c, f);
      if (marker != BoundaryId::interior) {
        for (int t = 0; t <= p; ++t) {
          const auto [a, b] = face_node(f, t, p);
          boundary_bits_[dofs[a + (p + 1) * b]] |=
              static_cast<std::uint8_t>(1u << static_cast<unsigned>(marker));
        }
        continue;
      }
      const FaceNeighbor nb = mesh_->face_neighbor(c, f);
      if (nb.kind != FaceNeighbor::Kind::finer) continue;
      if (nb.level_offset > 1)
        throw std::logic_error("FESpace: mesh is not 1-irregular");
      const CellKey key = mesh_->cell(c);
      const std::int64_t s = key.size();
      const std::int64_t x0 = key.ix * s;
      const std::int64_t y0 = key.iy * s;
      std::vector<int> masters(p + 1);
      for (int t = 0; t <= p; ++t) {
        const auto [a, b] = face_node(f, t, p);
        masters[t] = dofs[a + (p + 1) * b];
      }
      for (int j = 1; j < 2 * p; j += 2) {
        const std::int64_t off = j * s / (2 * p);
        std::int64_t x = x0, y = y0;
        switch (f) {
          case 0: x += off; break;
          case 1: x += s; y += off; break;
          case 2: x += off; y += s; break;
          default: y += off; break;
        }
        const auto it = index.find(mesh_->canonical(key.root, x, y));
        if (it == index.end()) throw std::logic_error("FESpace: missing hanging node");
        auto& entries = raw[it->second];
        if (!entries.empty()) continue;
        const double tau = static_cast<double>(j) / (2 * p);
        for (int t = 0; t <= p; ++t) entries.push_back({masters[t], lagrange(p, t, tau)});
      }
    }
  }

  // Resolve chains so that masters are never hanging themselves.
  std::map<int, std::vector<MasterEntry>> resolved;
  std::function<const std::vector<MasterEntry>&(int, int)> resolve =
      [&](int dof, int depth) -> const std::vector<MasterEntry>& {
    if (auto it = resolved.find(dof); it != resolved.end()) return it->second;
    if (depth > 32) throw std::logic_error("FESpace: cyclic hanging-node constraints");
    std::map<int, double> acc;
    for (const auto& e : raw.at(dof)) {
      if (raw.count(e.index)) {
        for (const auto& m : resolve(e.index, depth + 1)) acc[m.index] += e.weight * m.weight;
      } else {
        acc[e.index] += e.weight;
      }
    }
    std::vector<MasterEntry> out;
    for (auto [i, w] : acc)
      if (w != 0.0) out.push_back({i, w});
    return resolved.emplace(dof, std::move(out)).first->second;
  };
  hanging_offsets_.assign(nodes_.size() + 1, 0);
  for (const auto& [dof, entries] : raw) hanging_offsets_[dof + 1] = resolve(dof, 0).size();
  for (std::size_t i = 0; i < nodes_.size(); ++i) hanging_offsets_[i + 1] += hanging_offsets_[i];
  hanging_entries_.resize(hanging_offsets_.back());
  for (const auto& [dof, entries] : resolved)
    std::copy(entries.begin(), entries.end(), hanging_entries_.begin() + hanging_offsets_[dof]);
}

bool FESpace::on_boundary(std::size_t dof, BoundaryMask mask) const {
  for (auto id : {BoundaryId::dirichlet, BoundaryId::robin, BoundaryId::neumann})
    if (mask.contains(id) && (boundary_bits_[dof] & (1u << static_cast<unsigned>(id)))) return true;
  return false;
}

std::size_t FESpace::n_hanging() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < n_dofs(); ++i) n += is_hanging(i);
  return n;
}

void FESpace::make_conforming(Eigen::Ref<Eigen::VectorXd> scalar) const {
  for (std::size_t i = 0; i < n_dofs(); ++i) {
    if (!is_hanging(i)) continue;
    double v = 0;
    for (const auto& m : hanging_masters(i)) v += m.weight * scalar[m.index];
    scalar[i] = v;
  }
}

Eigen::VectorXd FESpace::interpolate(const std::function<double(const Eigen::Vector2d&)>& f) const {
  Eigen::VectorXd v(n_dofs());
  for (std::size_t i = 0; i < n_dofs(); ++i) v[i] = f(support_point(i));
  make_conforming(v);
  return v;
}

double FESpace::evaluate(const Eigen::Ref<const Eigen::VectorXd>& scalar, std::size_t cell,
                         const Eigen::Vector2d& ref) const {
  const auto dofs = cell_dofs(cell);
  double v = 0;
  for (int b = 0; b <= order_; ++b) {
    const double lb = lagrange(order_, b, ref.y());
    for (int a = 0; a <= order_; ++a)
      v += scalar[dofs[a + (order_ + 1) * b]] * lagrange(order_, a, ref.x()) * lb;
  }
  return v;
}

double FESpace::evaluate(const Eigen::Ref<const Eigen::VectorXd>& scalar, const NodeKey& node) const {
  const std::size_t c = mesh_->locate(node);
  return evaluate(scalar, c, mesh_->reference_coordinates(c, node));
}

std::pair<std::size_t, Eigen::Vector2d> FESpace::find_point(const Eigen::Vector2d& x) const {
  for (std::size_t c = 0; c < mesh_->n_cells(); ++c) {
    Eigen::Vector2d lo = mesh_->map(c, {0, 0}), hi = lo;
    for (const Eigen::Vector2d& r : {Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 1)}) {
      const Eigen::Vector2d q = mesh_->map(c, r);
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const double tol = 1e-12 * (hi - lo).norm();
    if ((x.array() < lo.array() - tol).any() || (x.array() > hi.array() + tol).any()) continue;
    Eigen::Vector2d ref(0.5, 0.5);
    for (int it = 0; it < 20; ++it) {
      const Eigen::Vector2d r = mesh_->map(c, ref) - x;
      ref -= mesh_->jacobian(c, ref).inverse() * r;
    }
    if ((ref.array() >= -1e-10).all() && (ref.array() <= 1 + 1e-10).all())
      return {c, ref.cwiseMax(0.0).cwiseMin(1.0)};
  }
  throw std::out_of_range("FESpace: point outside the mesh");
}

double FESpace::evaluate_at_point(const Eigen::Ref<const Eigen::VectorXd>& scalar,
                                  const Eigen::Vector2d& x) const {
  const auto [c, ref] = find_point(x);
  return evaluate(scalar, c, ref);
}

// ---------------------------------------------------------------------------
// Condensation

Condensation::Condensation(const FESpace& space, BoundaryMask dirichlet) : space_(&space) {
  const std::size_t n = space.n_dofs();
  dirichlet_.assign(n, 0);
  free_index_.assign(n, -1);
  for (std::size_t d = 0; d < n; ++d) {
    if (space.is_hanging(d)) continue;
    if (space.on_boundary(d, dirichlet)) {
      dirichlet_[d] = 1;
      continue;
    }
    free_index_[d] = static_cast<std::ptrdiff_t>(n_free_++);
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t d = 0; d < n; ++d) {
    if (free_index_[d] >= 0) {
      entries_.push_back({static_cast<int>(free_index_[d]), 1.0});
    } else if (space.is_hanging(d)) {
      for (const auto& m : space.hanging_masters(d))
        if (free_index_[m.index] >= 0)
          entries_.push_back({static_cast<int>(free_index_[m.index]), m.weight});
    }
    offsets_[d + 1] = entries_.size();
  }
}

Eigen::VectorXd Condensation::distribute(const Eigen::VectorXd& reduced,
                                         const Eigen::VectorXd& boundary) const {
  const std::size_t n = space_->n_dofs();
  Eigen::VectorXd full(kComponents * n);
  for (int k = 0; k < kComponents; ++k) {
    auto seg = full.segment(k * n, n);
    for (std::size_t d = 0; d < n; ++d) {
      if (free_index_[d] >= 0)
        seg[d] = reduced[k * n_free_ + free_index_[d]];
      else
        seg[d] = (dirichlet_[d] && boundary.size() > 0) ? boundary[k * n + d] : 0.0;
    }
    space_->make_conforming(seg);
  }
  return full;
}

Eigen::VectorXd Condensation::condense(const Eigen::VectorXd& full) const {
  const std::size_t n = space_->n_dofs();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_reduced());
  for (int k = 0; k < kComponents; ++k)
    for (std::size_t d = 0; d < n; ++d)
      for (const auto& e : expansion(d)) out[k * n_free_ + e.index] += e.weight * full[k * n + d];
  return out;
}

Eigen::VectorXd Condensation::restrict_to_free(const Eigen::VectorXd& full) const {
  const std::size_t n = space_->n_dofs();
  Eigen::VectorXd out(n_reduced());
  for (int k = 0; k < kComponents; ++k)
    for (std::size_t d = 0; d < n; ++d)
      if (free_index_[d] >= 0) out[k * n_free_ + free_index_[d]] = full[k * n + d];
  return out;
}

void Condensation::apply(Eigen::VectorXd& full, const Eigen::VectorXd& boundary) const {
  const std::size_t n = space_->n_dofs();
  for (int k = 0; k < kComponents; ++k) {
    auto seg = full.segment(k * n, n);
    if (boundary.size() > 0)
      for (std::size_t d = 0; d < n; ++d)
        if (dirichlet_[d]) seg[d] = boundary[k * n + d];
    space_->make_conforming(seg);
  }
}

// ---------------------------------------------------------------------------
// Local fields

LocalField LocalField::promoted(int target_order) const {
  if (target_order == order) return *this;
  if (order != 1 || target_order != 2) throw std::invalid_argument("LocalField: cannot demote");
  return {2, q1_at_q2_nodes() * coeffs};
}

namespace {
std::pair<LocalField, LocalField> common(const LocalField& a, const LocalField& b) {
  const int p = std::max(a.order, b.order);
  return {a.promoted(p), b.promoted(p)};
}
}  // namespace

LocalField operator-(const LocalField& a, const LocalField& b) {
  auto [x, y] = common(a, b);
  return {x.order, x.coeffs - y.coeffs};
}
LocalField operator+(const LocalField& a, const LocalField& b) {
  auto [x, y] = common(a, b);
  return {x.order, x.coeffs + y.coeffs};
}
LocalField operator*(double s, const LocalField& a) { return {a.order, s * a.coeffs}; }
CellFunction operator-(const CellFunction& a, const CellFunction& b) {
  return {a.theta - b.theta, a.species - b.species};
}
CellFunction operator+(const CellFunction& a, const CellFunction& b) {
  return {a.theta + b.theta, a.species + b.species};
}
CellFunction operator*(double s, const CellFunction& a) { return {s * a.theta, s * a.species}; }

LocalField gather_scalar(const FESpace& space, const Eigen::Ref<const Eigen::VectorXd>& scalar) {
  LocalField f{space.order(), Eigen::MatrixXd(space.dofs_per_cell(), space.mesh().n_cells())};
  for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
    const auto dofs = space.cell_dofs(c);
    for (int i = 0; i < space.dofs_per_cell(); ++i) f.coeffs(i, c) = scalar[dofs[i]];
  }
  return f;
}

CellFunction gather(const FESpace& space, const Eigen::VectorXd& full) {
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  if (full.size() != kComponents * n) throw std::invalid_argument("gather: vector size mismatch");
  return {gather_scalar(space, full.segment(0, n)), gather_scalar(space, full.segment(n, n))};
}

CellFunction zero_cell_function(const Mesh& mesh, int order) {
  const int nloc = (order + 1) * (order + 1);
  LocalField z{order, Eigen::MatrixXd::Zero(nloc, mesh.n_cells())};
  return {z, z};
}

// ---------------------------------------------------------------------------
// Interpolation operators

Eigen::VectorXd embed_cg1_to_cg2(const FESpace& p1, const Eigen::Ref<const Eigen::VectorXd>& v,
                                 const FESpace& p2) {
  require_same_mesh(p1, p2, "embed_cg1_to_cg2");
  if (p1.order() != 1 || p2.order() != 2) throw std::invalid_argument("embed_cg1_to_cg2: orders");
  if (v.size() != static_cast<Eigen::Index>(p1.n_dofs()))
    throw std::invalid_argument("embed_cg1_to_cg2: vector size mismatch");
  Eigen::VectorXd out(p2.n_dofs());
  const auto& table = q1_at_q2_nodes();
  for (std::size_t c = 0; c < p1.mesh().n_cells(); ++c) {
    const auto d1 = p1.cell_dofs(c);
    const auto d2 = p2.cell_dofs(c);
    Eigen::Vector4d local(v[d1[0]], v[d1[1]], v[d1[2]], v[d1[3]]);
    const Eigen::Matrix<double, 9, 1> high = table * local;
    for (int i = 0; i < 9; ++i) out[d2[i]] = high[i];
  }
  return out;
}

Eigen::VectorXd restrict_cg2_to_cg1(const FESpace& p2, const Eigen::Ref<const Eigen::VectorXd>& v,
                                    const FESpace& p1) {
  require_same_mesh(p1, p2, "restrict_cg2_to_cg1");
  if (p1.order() != 1 || p2.order() != 2) throw std::invalid_argument("restrict_cg2_to_cg1: orders");
  if (v.size() != static_cast<Eigen::Index>(p2.n_dofs()))
    throw std::invalid_argument("restrict_cg2_to_cg1: vector size mismatch");
  Eigen::VectorXd out(p1.n_dofs());
  for (std::size_t c = 0; c < p1.mesh().n_cells(); ++c) {
    const auto d1 = p1.cell_dofs(c);
    const auto d2 = p2.cell_dofs(c);
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) out[d1[a + 2 * b]] = v[d2[2 * a + 6 * b]];
  }
  p1.make_conforming(out);
  return out;
}

LocalField patch_interp_cg1_to_cg2(const FESpace& p1, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (p1.order() != 1) throw std::invalid_argument("patch_interp_cg1_to_cg2: need a cG(1) space");
  // For child (a,b): rows = child Q2 node, cols = patch node (I + 3 J).
  static const std::array<Eigen::Matrix<double, 9, 9>, 4> resample = [] {
    std::array<Eigen::Matrix<double, 9, 9>, 4> m;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a)
        for (int j = 0; j < 3; ++j)
          for (int i = 0; i < 3; ++i) {
            const double s = 0.5 * (a + 0.5 * i);
            const double t = 0.5 * (b + 0.5 * j);
            for (int J = 0; J < 3; ++J)
              for (int I = 0; I < 3; ++I)
                m[a + 2 * b](i + 3 * j, I + 3 * J) = lagrange(2, I, s) * lagrange(2, J, t);
          }
    return m;
  }();
  const auto groups = p1.mesh().patch_groups();
  LocalField out{2, Eigen::MatrixXd(9, p1.mesh().n_cells())};
  for (const auto& group : groups) {
    Eigen::Matrix<double, 9, 1> patch;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) {
        const auto dofs = p1.cell_dofs(group[a + 2 * b]);
        for (int y = 0; y < 2; ++y)
          for (int x = 0; x < 2; ++x) patch[(a + x) + 3 * (b + y)] = v[dofs[x + 2 * y]];
      }
    for (int k = 0; k < 4; ++k) out.coeffs.col(group[k]) = resample[k] * patch;
  }
  return out;
}

Eigen::VectorXd transfer(const FESpace& from, const Eigen::Ref<const Eigen::VectorXd>& v,
                         const FESpace& to) {
  if (from.mesh().coarse_ptr() != to.mesh().coarse_ptr())
    throw std::invalid_argument("transfer: meshes derive from different coarse meshes");
  if (v.size() != static_cast<Eigen::Index>(from.n_dofs()))
    throw std::invalid_argument("transfer: vector size mismatch");
  if (&from == &to || (from.order() == to.order() && from.mesh().same_cells(to.mesh())))
    return v;
  if (from.mesh().same_cells(to.mesh())) {
    if (from.order() == 1) return embed_cg1_to_cg2(from, v, to);
    return restrict_cg2_to_cg1(from, v, to);
  }
  Eigen::VectorXd out(to.n_dofs());
  for (std::size_t d = 0; d < to.n_dofs(); ++d)
    out[d] = to.is_hanging(d) ? 0.0 : from.evaluate(v, to.node(d));
  to.make_conforming(out);
  return out;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> transfer_matrix(const FESpace& from, const FESpace& to) {
  if (from.mesh().coarse_ptr() != to.mesh().coarse_ptr())
    throw std::invalid_argument("transfer_matrix: meshes derive from different coarse meshes");
  const int p = from.order();
  std::vector<std::vector<MasterEntry>> rows(to.n_dofs());
  for (std::size_t d = 0; d < to.n_dofs(); ++d) {
    if (to.is_hanging(d)) continue;
    const NodeKey& node = to.node(d);
    const std::size_t c = from.mesh().locate(node);
    const Eigen::Vector2d ref = from.mesh().reference_coordinates(c, node);
    const auto dofs = from.cell_dofs(c);
    for (int b = 0; b <= p; ++b)
      for (int a = 0; a <= p; ++a) {
        const double w = lagrange(p, a, ref.x()) * lagrange(p, b, ref.y());
        if (std::abs(w) > 1e-15) rows[d].push_back({dofs[a + (p + 1) * b], w});
      }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t d = 0; d < to.n_dofs(); ++d) {
    if (to.is_hanging(d)) {
      for (const auto& m : to.hanging_masters(d))
        for (const auto& e : rows[m.index])
          triplets.emplace_back(static_cast<int>(d), e.index, m.weight * e.weight);
    } else {
      for (const auto& e : rows[d]) triplets.emplace_back(static_cast<int>(d), e.index, e.weight);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> t(to.n_dofs(), from.n_dofs());
  t.setFromTriplets(triplets.begin(), triplets.end());
  return t;
}

Eigen::VectorXd transfer_pair(const FESpace& from, const Eigen::VectorXd& v, const FESpace& to) {
  const auto n = static_cast<Eigen::Index>(from.n_dofs());
  const auto m = static_cast<Eigen::Index>(to.n_dofs());
  Eigen::VectorXd out(kComponents * m);
  for (int k = 0; k < kComponents; ++k) out.segment(k * m, m) = transfer(from, v.segment(k * n, n), to);
  return out;
}

Eigen::VectorXd restrict_pair(const FESpace& p2, const Eigen::VectorXd& v, const FESpace& p1) {
  const auto n = static_cast<Eigen::Index>(p2.n_dofs());
  const auto m = static_cast<Eigen::Index>(p1.n_dofs());
  Eigen::VectorXd out(kComponents * m);
  for (int k = 0; k < kComponents; ++k)
    out.segment(k * m, m) = restrict_cg2_to_cg1(p2, v.segment(k * n, n), p1);
  return out;
}

Eigen::VectorXd embed_pair(const FESpace& p1, const Eigen::VectorXd& v, const FESpace& p2) {
  const auto n = static_cast<Eigen::Index>(p1.n_dofs());
  const auto m = static_cast<Eigen::Index>(p2.n_dofs());
  Eigen::VectorXd out(kComponents * m);
  for (int k = 0; k < kComponents; ++k)
    out.segment(k * m, m) = embed_cg1_to_cg2(p1, v.segment(k * n, n), p2);
  return out;
}

CellFunction patch_interp_pair(const FESpace& p1, const Eigen::VectorXd& v) {
  const auto n = static_cast<Eigen::Index>(p1.n_dofs());
  return {patch_interp_cg1_to_cg2(p1, v.segment(0, n)), patch_interp_cg1_to_cg2(p1, v.segment(n, n))};
}

// ---------------------------------------------------------------------------
// Quadrature helpers

CellValues::CellValues(int n_points_1d)
    : ref_points_(tensor_gauss(n_points_1d).first),
      ref_weights_(tensor_gauss(n_points_1d).second),
      q1_(1, ref_points_),
      q2_(2, ref_points_),
      jxw_(ref_points_.size()),
      points_(ref_points_.size()),
      jinvt_(ref_points_.size()) {}

void CellValues::reinit(const Mesh& mesh, std::size_t cell) {
  for (std::size_t q = 0; q < ref_points_.size(); ++q) {
    const Eigen::Matrix2d jac = mesh.jacobian(cell, ref_points_[q]);
    const double det = jac.determinant();
    if (!(det > 0)) throw std::runtime_error("CellValues: degenerate cell");
    jxw_[q] = det * ref_weights_[q];
    jinvt_[q] = jac.inverse().transpose();
    points_[q] = mesh.map(cell, ref_points_[q]);
  }
}

double CellValues::value(const ShapeTable& table, const double* coeffs, int q) const {
  double v = 0;
  for (int i = 0; i < table.n_local; ++i) v += coeffs[i] * table.values(i, q);
  return v;
}

Eigen::Vector2d CellValues::gradient(const ShapeTable& table, const double* coeffs, int q) const {
  double gx = 0, gy = 0;
  for (int i = 0; i < table.n_local; ++i) {
    gx += coeffs[i] * table.dxi(i, q);
    gy += coeffs[i] * table.deta(i, q);
  }
  return jinvt_[q] * Eigen::Vector2d(gx, gy);
}

FaceValues::FaceValues(int n_points) : rule_(n_points), jxw_(n_points), points_(n_points) {
  for (int f = 0; f < 4; ++f) {
    q1_.emplace_back(1, face_points(f, rule_));
    q2_.emplace_back(2, face_points(f, rule_));
  }
}

void FaceValues::reinit(const Mesh& mesh, std::size_t cell, int face) {
  face_ = face;
  const auto pts = face_points(face, rule_);
  for (int q = 0; q < rule_.size(); ++q) {
    const Eigen::Matrix2d jac = mesh.jacobian(cell, pts[q]);
    const Eigen::Vector2d tangent = (face % 2 == 0) ? jac.col(0) : jac.col(1);
    jxw_[q] = tangent.norm() * rule_.weights[q];
    points_[q] = mesh.map(cell, pts[q]);
  }
}

double FaceValues::value(const ShapeTable& table, const double* coeffs, int q) const {
  double v = 0;
  for (int i = 0; i < table.n_local; ++i) v += coeffs[i] * table.values(i, q);
  return v;
}

}  // namespace pudwr
