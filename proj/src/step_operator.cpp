#include "pudwr/step_operator.hpp"

#include <algorithm>
#include <numbers>

namespace pudwr {

namespace {
constexpr double kTimeGauss[2] = {0.5 - 0.5 / std::numbers::sqrt3, 0.5 + 0.5 / std::numbers::sqrt3};
}

StepOperator::StepOperator(const Problem& pr, const FESpace& space, const Condensation& cond)
    : problem_(&pr), space_(&space), cond_(&cond) {
  const Mesh& mesh = space.mesh();
  const int p = space.order();
  const std::size_t ncells = mesh.n_cells();
  nloc_ = space.dofs_per_cell();
  nf_ = static_cast<Eigen::Index>(cond.n_free());
  const int nq1 = quadrature_points(p, p);

  CellValues cv(nq1);
  const ShapeTable& shape = cv.shapes(p);
  nq_ = static_cast<int>(shape.points.size());
  values_ = shape.values;
  jxw_.resize(nq_, static_cast<Eigen::Index>(ncells));
  mass_.resize(nloc_, nloc_ * static_cast<Eigen::Index>(ncells));
  stiffness_.resize(nloc_, nloc_ * static_cast<Eigen::Index>(ncells));
  if (pr.source) points_.resize(ncells * nq_);
  Eigen::MatrixXd gx(nloc_, nq_), gy(nloc_, nq_);
  for (std::size_t c = 0; c < ncells; ++c) {
    cv.reinit(mesh, c);
    const auto cc = static_cast<Eigen::Index>(c);
    for (int q = 0; q < nq_; ++q) {
      jxw_(q, cc) = cv.JxW(q);
      if (pr.source) points_[c * nq_ + q] = cv.point(q);
      for (int i = 0; i < nloc_; ++i) {
        const Eigen::Vector2d g = cv.shape_gradient(shape, i, q);
        gx(i, q) = g.x();
        gy(i, q) = g.y();
      }
    }
    const auto w = jxw_.col(cc).asDiagonal();
    mass_.middleCols(cc * nloc_, nloc_) = values_ * w * values_.transpose();
    stiffness_.middleCols(cc * nloc_, nloc_) = gx * w * gx.transpose() + gy * w * gy.transpose();
  }

  if (pr.params.robin_k != 0.0) {
    FaceValues fv(nq1);
    for (std::size_t c = 0; c < ncells; ++c)
      for (int f = 0; f < 4; ++f) {
        if (mesh.face_marker(c, f) != BoundaryId::robin) continue;
        fv.reinit(mesh, c, f);
        const Eigen::MatrixXd& fs = fv.shapes(p).values;
        Eigen::VectorXd w(fv.n_points());
        for (int q = 0; q < fv.n_points(); ++q) w[q] = pr.params.robin_k * fv.JxW(q);
        robin_.push_back({static_cast<std::uint32_t>(c), fs * w.asDiagonal() * fs.transpose()});
      }
  }

  // Constraint expansion of every local dof.
  exp_offsets_.reserve(ncells * nloc_ + 1);
  exp_offsets_.push_back(0);
  for (std::size_t c = 0; c < ncells; ++c)
    for (std::size_t d : space.cell_dofs(c)) {
      for (const auto& e : cond.expansion(d)) exp_entries_.push_back(e);
      exp_offsets_.push_back(exp_entries_.size());
    }
  const auto expansion = [&](std::size_t c, int i) {
    const std::size_t li = c * nloc_ + i;
    return std::span<const MasterEntry>(exp_entries_.data() + exp_offsets_[li], exp_offsets_[li + 1] - exp_offsets_[li]);
  };

  // Scalar pattern over free dofs.
  std::vector<std::vector<std::int32_t>> rows(static_cast<std::size_t>(nf_));
  std::vector<std::int32_t> masters;
  for (std::size_t c = 0; c < ncells; ++c) {
    masters.clear();
    for (int i = 0; i < nloc_; ++i)
      for (const auto& e : expansion(c, i)) masters.push_back(static_cast<std::int32_t>(e.index));
    std::sort(masters.begin(), masters.end());
    masters.erase(std::unique(masters.begin(), masters.end()), masters.end());
    for (std::int32_t a : masters) rows[a].insert(rows[a].end(), masters.begin(), masters.end());
  }
  std::vector<std::int64_t> start(static_cast<std::size_t>(nf_) + 1, 0);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    auto& r = rows[a];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    start[a + 1] = start[a] + static_cast<std::int64_t>(r.size());
  }
  scalar_nnz_ = start.back();

  pattern_.resize(2 * nf_, 2 * nf_);
  pattern_.resizeNonZeros(4 * scalar_nnz_);
  int* outer = pattern_.outerIndexPtr();
  int* inner = pattern_.innerIndexPtr();
  for (int cr = 0; cr < 2; ++cr)
    for (Eigen::Index a = 0; a < nf_; ++a) {
      const std::int64_t s = cr * 2 * scalar_nnz_ + 2 * start[a];
      const auto& r = rows[a];
      outer[cr * nf_ + a] = static_cast<int>(s);
      for (std::size_t o = 0; o < r.size(); ++o) {
        inner[s + o] = r[o];
        inner[s + r.size() + o] = static_cast<int>(nf_) + r[o];
      }
    }
  outer[2 * nf_] = static_cast<int>(4 * scalar_nnz_);
  std::fill(pattern_.valuePtr(), pattern_.valuePtr() + 4 * scalar_nnz_, 0.0);

  scatter_offsets_.reserve(ncells + 1);
  scatter_offsets_.push_back(0);
  for (std::size_t c = 0; c < ncells; ++c) {
    for (int i = 0; i < nloc_; ++i)
      for (const auto& ea : expansion(c, i)) {
        const auto& r = rows[ea.index];
        for (int j = 0; j < nloc_; ++j)
          for (const auto& eb : expansion(c, j)) {
            const auto it = std::lower_bound(r.begin(), r.end(), static_cast<std::int32_t>(eb.index));
            scatter_.push_back({static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j),
                                static_cast<std::int32_t>(2 * start[ea.index] + (it - r.begin())),
                                static_cast<std::int32_t>(r.size()), ea.weight * eb.weight});
          }
      }
    scatter_offsets_.push_back(scatter_.size());
  }
}

void StepOperator::assemble(const Eigen::VectorXd& u, const Eigen::VectorXd& u_prev, double t0, double k,
                            Eigen::VectorXd& residual, SparseMatrix* jacobian) const {
  const Problem& pr = *problem_;
  const FESpace& space = *space_;
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  if (u.size() != 2 * n || u_prev.size() != 2 * n) throw std::invalid_argument("StepOperator: vector size mismatch");
  const double inv_le = 1.0 / pr.params.Le;
  const int nl = nloc_;

  residual.setZero(2 * nf_);
  double* vals = nullptr;
  if (jacobian) {
    // Matching sizes are not enough: two meshes with equal dof and nonzero
    // counts can still differ in layout.
    const auto same = [&] {
      const SparseMatrix& j = *jacobian;
      if (j.nonZeros() != pattern_.nonZeros() || j.rows() != pattern_.rows() || !j.isCompressed()) return false;
      return std::equal(pattern_.outerIndexPtr(), pattern_.outerIndexPtr() + pattern_.rows() + 1, j.outerIndexPtr()) &&
             std::equal(pattern_.innerIndexPtr(), pattern_.innerIndexPtr() + pattern_.nonZeros(), j.innerIndexPtr());
    };
    if (!same()) *jacobian = pattern_;
    vals = jacobian->valuePtr();
    std::fill(vals, vals + 4 * scalar_nnz_, 0.0);
  }
  const std::int64_t yrow = 2 * scalar_nnz_;

  Eigen::VectorXd th(nl), y(nl), dth(nl), dy(nl), rt(nl), ry(nl);
  Eigen::VectorXd wv(nq_), wt(nq_), wy(nq_), f0(nq_), f1(nq_);
  Eigen::MatrixXd m_t(nl, nl), m_y(nl, nl), kt(nl, nl), ky(nl, nl), kyt(nl, nl), kty(nl, nl);
  Eigen::VectorXd vt(nq_), vy(nq_);

  const auto scatter_residual = [&](std::size_t c, const Eigen::VectorXd& a, const Eigen::VectorXd* b) {
    const std::size_t li0 = c * nl;
    for (int i = 0; i < nl; ++i)
      for (std::size_t e = exp_offsets_[li0 + i]; e < exp_offsets_[li0 + i + 1]; ++e) {
        const auto& m = exp_entries_[e];
        residual[static_cast<Eigen::Index>(m.index)] += m.weight * a[i];
        if (b) residual[nf_ + static_cast<Eigen::Index>(m.index)] += m.weight * (*b)[i];
      }
  };

  for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    const auto dofs = space.cell_dofs(c);
    for (int i = 0; i < nl; ++i) {
      th[i] = u[dofs[i]];
      y[i] = u[n + dofs[i]];
      dth[i] = th[i] - u_prev[dofs[i]];
      dy[i] = y[i] - u_prev[n + dofs[i]];
    }
    const auto mass = mass_.middleCols(cc * nl, nl);
    const auto stiff = stiffness_.middleCols(cc * nl, nl);
    rt.noalias() = mass * dth;
    rt.noalias() += k * (stiff * th);
    ry.noalias() = mass * dy;
    ry.noalias() += (k * inv_le) * (stiff * y);

    const bool react = pr.reaction;
    if (react || pr.source) {
      if (react) {
        vt.noalias() = values_.transpose() * th;
        vy.noalias() = values_.transpose() * y;
      }
      for (int q = 0; q < nq_; ++q) {
        const double jxw = jxw_(q, cc);
        double s0 = 0, s1 = 0;
        if (pr.source)
          for (double tau : kTimeGauss) {
            const Eigen::Vector2d f = pr.source(points_[c * nq_ + q], t0 + tau * k);
            s0 += 0.5 * f[0];
            s1 += 0.5 * f[1];
          }
        f0[q] = jxw * k * s0;
        f1[q] = jxw * k * s1;
        if (react) {
          const OmegaPartials om = pr.reaction_terms(vt[q], vy[q]);
          wv[q] = jxw * k * om.value;
          wt[q] = jxw * k * om.d_theta;
          wy[q] = jxw * k * om.d_species;
        } else {
          wv[q] = wt[q] = wy[q] = 0.0;
        }
      }
      rt.noalias() -= values_ * (wv + f0);
      ry.noalias() += values_ * (wv - f1);
    }
    scatter_residual(c, rt, &ry);
    if (!jacobian) continue;

    kt = mass + k * stiff;
    ky = mass + (k * inv_le) * stiff;
    if (react) {
      m_t.noalias() = values_ * wt.asDiagonal() * values_.transpose();
      m_y.noalias() = values_ * wy.asDiagonal() * values_.transpose();
      kt -= m_t;
      ky += m_y;
      kty = -m_y;
      kyt = m_t;
    } else {
      kty.setZero();
      kyt.setZero();
    }
    for (std::size_t s = scatter_offsets_[c]; s < scatter_offsets_[c + 1]; ++s) {
      const Scatter& sc = scatter_[s];
      vals[sc.base] += sc.weight * kt(sc.i, sc.j);
      vals[sc.base + sc.len] += sc.weight * kty(sc.i, sc.j);
      vals[yrow + sc.base] += sc.weight * kyt(sc.i, sc.j);
      vals[yrow + sc.base + sc.len] += sc.weight * ky(sc.i, sc.j);
    }
  }

  // Robin cooling of theta.
  for (const RobinFace& rf : robin_) {
    const auto dofs = space.cell_dofs(rf.cell);
    for (int i = 0; i < nl; ++i) th[i] = u[dofs[i]];
    rt.noalias() = k * (rf.matrix * th);
    scatter_residual(rf.cell, rt, nullptr);
    if (!jacobian) continue;
    for (std::size_t s = scatter_offsets_[rf.cell]; s < scatter_offsets_[rf.cell + 1]; ++s) {
      const Scatter& sc = scatter_[s];
      vals[sc.base] += sc.weight * k * rf.matrix(sc.i, sc.j);
    }
  }
}

}  // namespace pudwr
