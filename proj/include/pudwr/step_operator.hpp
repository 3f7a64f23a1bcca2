#pragma once

#include <cstdint>
#include <vector>

#include "pudwr/model.hpp"

namespace pudwr {

/// Condensed dG(0) step system on one space: the residual C^T (A - F) and the
/// Jacobian C^T J C, assembled straight into a fixed CSR pattern. Geometry and
/// the constraint scatter are computed once, so a Newton iteration costs one
/// pass over the cells. Reduced numbering is [theta free; Y free].
class StepOperator {
 public:
  StepOperator(const Problem& problem, const FESpace& space, const Condensation& cond);

  const FESpace& space() const { return *space_; }
  const Condensation& condensation() const { return *cond_; }
  Eigen::Index size() const { return 2 * nf_; }

  /// `u` and `u_prev` are full vectors on the space; `jacobian` may be null.
  void assemble(const Eigen::VectorXd& u, const Eigen::VectorXd& u_prev, double t0, double k,
                Eigen::VectorXd& residual, SparseMatrix* jacobian) const;

 private:
  struct Scatter {
    std::uint8_t i, j;  // local scalar indices
    std::int32_t base;  // offset of the theta-theta entry in the value array
    std::int32_t len;   // scalar row length: the theta-Y entry sits len further
    double weight;
  };
  struct RobinFace {
    std::uint32_t cell;
    Eigen::MatrixXd matrix;  // int kappa phi_i phi_j over the face
  };

  const Problem* problem_;
  const FESpace* space_;
  const Condensation* cond_;
  int nloc_ = 0;
  int nq_ = 0;
  Eigen::Index nf_ = 0;
  std::int64_t scalar_nnz_ = 0;

  Eigen::MatrixXd values_;               // nloc x nq shape values
  Eigen::MatrixXd jxw_;                  // nq x cells
  std::vector<Eigen::Vector2d> points_;  // cell * nq + q (only with a source)
  Eigen::MatrixXd mass_, stiffness_;     // nloc x (nloc * cells), cell blocks side by side
  std::vector<std::size_t> exp_offsets_;    // per (cell, i)
  std::vector<MasterEntry> exp_entries_;
  std::vector<std::size_t> scatter_offsets_;  // per cell
  std::vector<Scatter> scatter_;
  std::vector<RobinFace> robin_;
  SparseMatrix pattern_;
};

}  // namespace pudwr
