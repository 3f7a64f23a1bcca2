#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pudwr/mesh.hpp"
#include "pudwr/quadrature.hpp"

namespace pudwr {

/// Number of solution components: temperature theta and species Y.
inline constexpr int kComponents = 2;

struct MasterEntry {
  int index;
  double weight;
};

/// Scalar continuous Lagrange space of order 1 or 2 on a quadrilateral mesh.
/// Hanging nodes are constrained to the coarse side; constraint chains are
/// resolved so that masters are never themselves hanging.
class FESpace {
 public:
  FESpace(MeshPtr mesh, int order);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int order() const { return order_; }
  int dofs_per_cell() const { return (order_ + 1) * (order_ + 1); }
  std::size_t n_dofs() const { return nodes_.size(); }

  std::span<const int> cell_dofs(std::size_t c) const {
    return {cell_dofs_.data() + c * dofs_per_cell(), static_cast<std::size_t>(dofs_per_cell())};
  }
  const NodeKey& node(std::size_t dof) const { return nodes_[dof]; }
  Eigen::Vector2d support_point(std::size_t dof) const { return mesh_->point(nodes_[dof]); }

  bool on_boundary(std::size_t dof, BoundaryMask mask) const;
  bool is_hanging(std::size_t dof) const { return hanging_offsets_[dof + 1] > hanging_offsets_[dof]; }
  std::span<const MasterEntry> hanging_masters(std::size_t dof) const {
    return {hanging_entries_.data() + hanging_offsets_[dof],
            hanging_offsets_[dof + 1] - hanging_offsets_[dof]};
  }
  std::size_t n_hanging() const;

  /// Overwrites hanging entries of a scalar coefficient vector by their
  /// constrained values.
  void make_conforming(Eigen::Ref<Eigen::VectorXd> scalar) const;

  /// Nodal interpolation followed by hanging-node conformity.
  Eigen::VectorXd interpolate(const std::function<double(const Eigen::Vector2d&)>& f) const;

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& scalar, std::size_t cell,
                  const Eigen::Vector2d& ref) const;
  /// Evaluation at an arbitrary lattice node of the same coarse mesh.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& scalar, const NodeKey& node) const;
  /// Value at a physical point (searches the cell; for tests and probes).
  double evaluate_at_point(const Eigen::Ref<const Eigen::VectorXd>& scalar,
                           const Eigen::Vector2d& x) const;
  /// Cell containing x and its reference coordinates (Newton inversion).
  std::pair<std::size_t, Eigen::Vector2d> find_point(const Eigen::Vector2d& x) const;

 private:
  MeshPtr mesh_;
  int order_;
  std::vector<int> cell_dofs_;
  std::vector<NodeKey> nodes_;
  std::vector<std::uint8_t> boundary_bits_;
  std::vector<std::size_t> hanging_offsets_;
  std::vector<MasterEntry> hanging_entries_;
};

using SpacePtr = std::shared_ptr<const FESpace>;

/// Reduced numbering of a two-component system: hanging and Dirichlet dofs
/// are eliminated, free dofs of component k map to k * n_free() + index.
class Condensation {
 public:
  Condensation(const FESpace& space, BoundaryMask dirichlet);

  const FESpace& space() const { return *space_; }
  std::size_t n_free() const { return n_free_; }
  std::size_t n_reduced() const { return kComponents * n_free_; }
  bool is_dirichlet(std::size_t dof) const { return dirichlet_[dof] != 0; }
  std::ptrdiff_t free_index(std::size_t dof) const { return free_index_[dof]; }

  /// Free masters of a dof (itself for free dofs, none for Dirichlet dofs).
  std::span<const MasterEntry> expansion(std::size_t dof) const {
    return {entries_.data() + offsets_[dof], offsets_[dof + 1] - offsets_[dof]};
  }

  /// Full vector from reduced unknowns; Dirichlet entries are copied from
  /// `boundary` (pass an empty vector for homogeneous data).
  Eigen::VectorXd distribute(const Eigen::VectorXd& reduced, const Eigen::VectorXd& boundary) const;
  /// C^T r: accumulates a full dual vector onto the reduced unknowns.
  Eigen::VectorXd condense(const Eigen::VectorXd& full) const;
  /// Free entries of a full primal vector.
  Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full) const;
  /// Enforces hanging constraints and, if given, Dirichlet values on a full vector.
  void apply(Eigen::VectorXd& full, const Eigen::VectorXd& boundary) const;

 private:
  const FESpace* space_;
  std::size_t n_free_ = 0;
  std::vector<std::uint8_t> dirichlet_;
  std::vector<std::ptrdiff_t> free_index_;
  std::vector<std::size_t> offsets_;
  std::vector<MasterEntry> entries_;
};

/// Per-cell coefficients of a (possibly discontinuous) cellwise Q_p field.
struct LocalField {
  int order = 1;
  Eigen::MatrixXd coeffs;  // (order+1)^2 x n_cells

  int n_local() const { return (order + 1) * (order + 1); }
  LocalField promoted(int target_order) const;
};

/// Two-component cellwise field.
struct CellFunction {
  LocalField theta;
  LocalField species;

  int order() const { return std::max(theta.order, species.order); }
};

LocalField operator-(const LocalField& a, const LocalField& b);
LocalField operator+(const LocalField& a, const LocalField& b);
LocalField operator*(double s, const LocalField& a);
CellFunction operator-(const CellFunction& a, const CellFunction& b);
CellFunction operator+(const CellFunction& a, const CellFunction& b);
CellFunction operator*(double s, const CellFunction& a);

LocalField gather_scalar(const FESpace& space, const Eigen::Ref<const Eigen::VectorXd>& scalar);
/// Splits a full [theta; Y] vector into cellwise coefficients.
CellFunction gather(const FESpace& space, const Eigen::VectorXd& full);
CellFunction zero_cell_function(const Mesh& mesh, int order);

/// Exact embedding of a cG(1) function into cG(2) on the same mesh.
Eigen::VectorXd embed_cg1_to_cg2(const FESpace& p1, const Eigen::Ref<const Eigen::VectorXd>& v,
                                 const FESpace& p2);
/// Vertex values of a cG(2) function as a cG(1) function on the same mesh.
Eigen::VectorXd restrict_cg2_to_cg1(const FESpace& p2, const Eigen::Ref<const Eigen::VectorXd>& v,
                                    const FESpace& p1);
/// Biquadratic reconstruction on each 2x2 patch from the nine cG(1) nodal
/// values of the patch, returned as cellwise Q2 coefficients on the fine cells.
LocalField patch_interp_cg1_to_cg2(const FESpace& p1, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Nodal interpolation between spaces on refinements of the same coarse mesh
/// (any orders). Exact when `to` is finer or equal.
Eigen::VectorXd transfer(const FESpace& from, const Eigen::Ref<const Eigen::VectorXd>& v,
                         const FESpace& to);
/// Matrix form of `transfer`, including hanging-node conformity on `to`.
Eigen::SparseMatrix<double, Eigen::RowMajor> transfer_matrix(const FESpace& from, const FESpace& to);

/// Two-component versions acting on full [theta; Y] vectors.
Eigen::VectorXd transfer_pair(const FESpace& from, const Eigen::VectorXd& v, const FESpace& to);
Eigen::VectorXd restrict_pair(const FESpace& p2, const Eigen::VectorXd& v, const FESpace& p1);
Eigen::VectorXd embed_pair(const FESpace& p1, const Eigen::VectorXd& v, const FESpace& p2);
CellFunction patch_interp_pair(const FESpace& p1, const Eigen::VectorXd& v);

/// Affine-in-time function on one interval, given by its one-sided limits
/// at the interval ends.
template <typename Field>
struct TimeAffine {
  Field start;  // value at t_{n-1}^+
  Field end;    // value at t_n^-

  /// Value at relative time tau in [0,1].
  Field at(double tau) const { return (1.0 - tau) * start + tau * end; }
};

/// Cached per-cell quadrature data: points, JxW and inverse transposed
/// Jacobians for a tensor Gauss rule.
class CellValues {
 public:
  explicit CellValues(int n_points_1d);

  void reinit(const Mesh& mesh, std::size_t cell);
  int n_points() const { return static_cast<int>(jxw_.size()); }
  double JxW(int q) const { return jxw_[q]; }
  const Eigen::Vector2d& point(int q) const { return points_[q]; }
  const Eigen::Vector2d& reference_point(int q) const { return ref_points_[q]; }
  const ShapeTable& shapes(int order) const { return order == 1 ? q1_ : q2_; }

  /// Value and physical gradient of a local field at quadrature point q.
  double value(const ShapeTable& table, const double* coeffs, int q) const;
  Eigen::Vector2d gradient(const ShapeTable& table, const double* coeffs, int q) const;
  Eigen::Vector2d shape_gradient(const ShapeTable& table, int i, int q) const {
    return jinvt_[q] * Eigen::Vector2d(table.dxi(i, q), table.deta(i, q));
  }

 private:
  std::vector<Eigen::Vector2d> ref_points_;
  std::vector<double> ref_weights_;
  ShapeTable q1_;
  ShapeTable q2_;
  std::vector<double> jxw_;
  std::vector<Eigen::Vector2d> points_;
  std::vector<Eigen::Matrix2d> jinvt_;
};

/// Quadrature on one face of a cell.
class FaceValues {
 public:
  explicit FaceValues(int n_points);

  void reinit(const Mesh& mesh, std::size_t cell, int face);
  int n_points() const { return rule_.size(); }
  double JxW(int q) const { return jxw_[q]; }
  const Eigen::Vector2d& point(int q) const { return points_[q]; }
  const ShapeTable& shapes(int order) const { return order == 1 ? q1_[face_] : q2_[face_]; }
  double value(const ShapeTable& table, const double* coeffs, int q) const;

 private:
  GaussRule rule_;
  std::vector<ShapeTable> q1_;
  std::vector<ShapeTable> q2_;
  int face_ = 0;
  std::vector<double> jxw_;
  std::vector<Eigen::Vector2d> points_;
};

}  // namespace pudwr
