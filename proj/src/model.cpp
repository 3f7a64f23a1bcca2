#include "pudwr/model.hpp"

#include <Eigen/LU>

#include <iostream>
#include <numbers>

namespace pudwr {

namespace detail {
void warn_denominator_clamped() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::cerr << "warning: Arrhenius denominator 1 + alpha (theta - 1) fell below the floor; clamping\n";
}
}  // namespace detail

double initial_theta(double x, const ModelParams&) { return x <= 9.0 ? 1.0 : std::exp(9.0 - x); }
double initial_species(double x, const ModelParams& p) {
  return x <= 9.0 ? 0.0 : 1.0 - std::exp(p.Le * (9.0 - x));
}

Problem combustion_problem(const ModelParams& params, double final_time, double domain_measure) {
  Problem pr;
  pr.kind = Problem::Kind::combustion;
  pr.name = "combustion";
  pr.params = params;
  pr.final_time = final_time;
  pr.domain_measure = domain_measure;
  pr.initial = [params](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(initial_theta(x.x(), params), initial_species(x.x(), params));
  };
  pr.boundary = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d(1.0, 0.0); };
  return pr;
}

Problem heat_problem(double final_time) {
  using std::numbers::pi;
  Problem pr;
  pr.kind = Problem::Kind::heat;
  pr.name = "heat";
  pr.reaction = false;
  pr.final_time = final_time;
  pr.domain_measure = 1.0;
  pr.initial = [](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(std::sin(pi * x.x()) * std::sin(pi * x.y()), 0.0);
  };
  pr.boundary = [](const Eigen::Vector2d&, double) { return Eigen::Vector2d(0.0, 0.0); };
  pr.source = [](const Eigen::Vector2d& x, double t) {
    return Eigen::Vector2d((2 * pi * pi - 1) * std::sin(pi * x.x()) * std::sin(pi * x.y()) * std::exp(-t), 0.0);
  };
  pr.exact_goal = 4.0 * (1.0 - std::exp(-final_time)) / (pi * pi * final_time);
  return pr;
}

Problem heat_linear_problem(double final_time) {
  Problem pr;
  pr.kind = Problem::Kind::heat_linear;
  pr.name = "heat_linear";
  pr.reaction = false;
  pr.final_time = final_time;
  pr.domain_measure = 1.0;
  pr.initial = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.x(), 0.0); };
  pr.boundary = [](const Eigen::Vector2d& x, double) { return Eigen::Vector2d(x.x(), 0.0); };
  pr.exact_goal = 0.5;
  return pr;
}

namespace {

constexpr double kTimeGauss[2] = {0.5 - 0.5 / std::numbers::sqrt3, 0.5 + 0.5 / std::numbers::sqrt3};

struct FieldAt {
  double value;
  Eigen::Vector2d grad;
};

FieldAt eval(const CellValues& cv, const LocalField& f, std::size_t c, int q) {
  const ShapeTable& t = cv.shapes(f.order);
  const double* coeffs = f.coeffs.col(static_cast<Eigen::Index>(c)).data();
  return {cv.value(t, coeffs, q), cv.gradient(t, coeffs, q)};
}

double eval_face(const FaceValues& fv, const LocalField& f, std::size_t c, int q) {
  return fv.value(fv.shapes(f.order), f.coeffs.col(static_cast<Eigen::Index>(c)).data(), q);
}

int max_order(const TimeAffine<CellFunction>& w) { return std::max(w.start.order(), w.end.order()); }

Eigen::Vector2d source_at(const Problem& pr, const Eigen::Vector2d& x, double t) {
  return pr.source ? pr.source(x, t) : Eigen::Vector2d::Zero();
}

// Scatter of a cellwise integrand  A chi + B . grad chi  onto the PU dofs.
class PuAccumulator {
 public:
  PuAccumulator(const FESpace* pu, const Mesh& mesh) : pu_(pu) {
    if (!pu_) return;
    if (pu_->order() != 1 || !pu_->mesh().same_cells(mesh))
      throw std::invalid_argument("partition of unity must be cG(1) on the interval mesh");
    raw_ = Eigen::VectorXd::Zero(pu_->n_dofs());
  }
  bool active() const { return pu_ != nullptr; }
  void add_volume(const CellValues& cv, std::size_t c, int q, double a, const Eigen::Vector2d& b) {
    const auto dofs = pu_->cell_dofs(c);
    const ShapeTable& t = cv.shapes(1);
    for (int i = 0; i < 4; ++i) raw_[dofs[i]] += cv.JxW(q) * (a * t.values(i, q) + b.dot(cv.shape_gradient(t, i, q)));
  }
  void add_face(const FaceValues& fv, std::size_t c, int q, double a) {
    const auto dofs = pu_->cell_dofs(c);
    const ShapeTable& t = fv.shapes(1);
    for (int i = 0; i < 4; ++i) raw_[dofs[i]] += fv.JxW(q) * a * t.values(i, q);
  }
  Eigen::VectorXd finish() {
    if (!pu_) return {};
    for (std::size_t d = 0; d < pu_->n_dofs(); ++d) {
      if (!pu_->is_hanging(d)) continue;
      for (const auto& m : pu_->hanging_masters(d)) raw_[m.index] += m.weight * raw_[d];
      raw_[d] = 0.0;
    }
    return std::move(raw_);
  }

 private:
  const FESpace* pu_;
  Eigen::VectorXd raw_;
};

}  // namespace

FormValue residual_form(const Problem& pr, const StepState& s, const TimeAffine<CellFunction>& w, const FESpace* pu) {
  const Mesh& mesh = *s.mesh;
  const double k = s.k;
  const double inv_le = 1.0 / pr.params.Le;
  const int nq = quadrature_points(std::max(s.u.order(), s.u_prev.order()), max_order(w));
  CellValues cv(nq);
  FaceValues fv(nq);
  PuAccumulator acc(pu, mesh);
  FormValue out;

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    cv.reinit(mesh, c);
    for (int q = 0; q < cv.n_points(); ++q) {
      const FieldAt th = eval(cv, s.u.theta, c, q);
      const FieldAt y = eval(cv, s.u.species, c, q);
      const FieldAt thp = eval(cv, s.u_prev.theta, c, q);
      const FieldAt yp = eval(cv, s.u_prev.species, c, q);
      const FieldAt ws_t = eval(cv, w.start.theta, c, q);
      const FieldAt ws_y = eval(cv, w.start.species, c, q);
      const FieldAt we_t = eval(cv, w.end.theta, c, q);
      const FieldAt we_y = eval(cv, w.end.species, c, q);
      const double om = pr.reaction_terms(th.value, y.value).value;

      double a = (th.value - thp.value) * ws_t.value + (y.value - yp.value) * ws_y.value;
      Eigen::Vector2d b = Eigen::Vector2d::Zero();
      for (double tau : kTimeGauss) {
        const double wt = (1 - tau) * ws_t.value + tau * we_t.value;
        const double wy = (1 - tau) * ws_y.value + tau * we_y.value;
        const Eigen::Vector2d gwt = (1 - tau) * ws_t.grad + tau * we_t.grad;
        const Eigen::Vector2d gwy = (1 - tau) * ws_y.grad + tau * we_y.grad;
        const Eigen::Vector2d f = source_at(pr, cv.point(q), s.t0 + tau * k);
        a += 0.5 * k * (th.grad.dot(gwt) + inv_le * y.grad.dot(gwy) + om * (wy - wt) - f[0] * wt - f[1] * wy);
        b += 0.5 * k * (wt * th.grad + inv_le * wy * y.grad);
      }
      out.total -= cv.JxW(q) * a;
      if (acc.active()) acc.add_volume(cv, c, q, -a, -b);
    }
    for (int f = 0; f < 4; ++f) {
      if (mesh.face_marker(c, f) != BoundaryId::robin) continue;
      fv.reinit(mesh, c, f);
      for (int q = 0; q < fv.n_points(); ++q) {
        const double th = eval_face(fv, s.u.theta, c, q);
        const double wts = eval_face(fv, w.start.theta, c, q);
        const double wte = eval_face(fv, w.end.theta, c, q);
        double a = 0;
        for (double tau : kTimeGauss) a += 0.5 * k * pr.params.robin_k * th * ((1 - tau) * wts + tau * wte);
        out.total -= fv.JxW(q) * a;
        if (acc.active()) acc.add_face(fv, c, q, -a);
      }
    }
  }
  out.localized = acc.finish();
  return out;
}

FormValue adjoint_form(const Problem& pr, const StepState& s, const CellFunction& z, const CellFunction& z_next,
                       const TimeAffine<CellFunction>& w, const FESpace* pu) {
  const Mesh& mesh = *s.mesh;
  const double k = s.k;
  const double inv_le = 1.0 / pr.params.Le;
  const double scale = pr.goal_scale();
  const int nq = quadrature_points(std::max({s.u.order(), z.order(), z_next.order()}), max_order(w));
  CellValues cv(nq);
  FaceValues fv(nq);
  PuAccumulator acc(pu, mesh);
  FormValue out;

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    cv.reinit(mesh, c);
    for (int q = 0; q < cv.n_points(); ++q) {
      const double th = eval(cv, s.u.theta, c, q).value;
      const double y = eval(cv, s.u.species, c, q).value;
      const FieldAt zt = eval(cv, z.theta, c, q);
      const FieldAt zy = eval(cv, z.species, c, q);
      const double znt = eval(cv, z_next.theta, c, q).value;
      const double zny = eval(cv, z_next.species, c, q).value;
      const FieldAt ws_t = eval(cv, w.start.theta, c, q);
      const FieldAt ws_y = eval(cv, w.start.species, c, q);
      const FieldAt we_t = eval(cv, w.end.theta, c, q);
      const FieldAt we_y = eval(cv, w.end.species, c, q);
      const OmegaPartials r = pr.reaction_terms(th, y);
      const OmegaPartials g = pr.goal_integrand(th, y);

      double a = -(we_t.value * (zt.value - znt) + we_y.value * (zy.value - zny));
      Eigen::Vector2d b = Eigen::Vector2d::Zero();
      for (double tau : kTimeGauss) {
        const double pt = (1 - tau) * ws_t.value + tau * we_t.value;
        const double py = (1 - tau) * ws_y.value + tau * we_y.value;
        const Eigen::Vector2d gpt = (1 - tau) * ws_t.grad + tau * we_t.grad;
        const Eigen::Vector2d gpy = (1 - tau) * ws_y.grad + tau * we_y.grad;
        a += 0.5 * k *
             (scale * (g.d_theta * pt + g.d_species * py) -
              (gpt.dot(zt.grad) + inv_le * gpy.dot(zy.grad) +
               (r.d_theta * pt + r.d_species * py) * (zy.value - zt.value)));
        b -= 0.5 * k * (pt * zt.grad + inv_le * py * zy.grad);
      }
      out.total += cv.JxW(q) * a;
      if (acc.active()) acc.add_volume(cv, c, q, a, b);
    }
    for (int f = 0; f < 4; ++f) {
      if (mesh.face_marker(c, f) != BoundaryId::robin) continue;
      fv.reinit(mesh, c, f);
      for (int q = 0; q < fv.n_points(); ++q) {
        const double zt = eval_face(fv, z.theta, c, q);
        const double wts = eval_face(fv, w.start.theta, c, q);
        const double wte = eval_face(fv, w.end.theta, c, q);
        double a = 0;
        for (double tau : kTimeGauss) a -= 0.5 * k * pr.params.robin_k * zt * ((1 - tau) * wts + tau * wte);
        out.total += fv.JxW(q) * a;
        if (acc.active()) acc.add_face(fv, c, q, a);
      }
    }
  }
  out.localized = acc.finish();
  return out;
}

double goal_integral(const Problem& pr, const Mesh& mesh, const CellFunction& u) {
  CellValues cv(quadrature_points(u.order(), u.order()));
  double sum = 0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    cv.reinit(mesh, c);
    for (int q = 0; q < cv.n_points(); ++q) {
      const double th = eval(cv, u.theta, c, q).value;
      const double y = eval(cv, u.species, c, q).value;
      sum += cv.JxW(q) * pr.goal_integrand(th, y).value;
    }
  }
  return sum;
}

namespace {

// Local values of a full [theta; Y] vector on cell c.
void gather_local(const FESpace& space, const Eigen::VectorXd& v, std::size_t c, double* theta, double* y) {
  const auto n = space.n_dofs();
  const auto dofs = space.cell_dofs(c);
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    theta[i] = v[dofs[i]];
    y[i] = v[n + dofs[i]];
  }
}

}  // namespace

StepSystem assemble_step(const Problem& pr, const FESpace& space, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& u_prev, double t0, double k, bool with_matrix) {
  const Mesh& mesh = space.mesh();
  const int p = space.order();
  const int nloc = space.dofs_per_cell();
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  if (u.size() != 2 * n || u_prev.size() != 2 * n) throw std::invalid_argument("assemble_step: vector size mismatch");
  const double inv_le = 1.0 / pr.params.Le;
  const double kappa = pr.params.robin_k;

  CellValues cv(quadrature_points(p, p));
  FaceValues fv(quadrature_points(p, p));
  const ShapeTable& shape = cv.shapes(p);

  StepSystem sys;
  sys.residual = Eigen::VectorXd::Zero(2 * n);
  std::vector<Eigen::Triplet<double>> triplets;
  if (with_matrix) triplets.reserve(mesh.n_cells() * 4 * nloc * nloc);

  std::vector<double> th(nloc), y(nloc), thp(nloc), yp(nloc);
  std::vector<Eigen::Vector2d> grads(nloc);
  Eigen::VectorXd r(2 * nloc);
  Eigen::MatrixXd kl(2 * nloc, 2 * nloc);

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    cv.reinit(mesh, c);
    gather_local(space, u, c, th.data(), y.data());
    gather_local(space, u_prev, c, thp.data(), yp.data());
    r.setZero();
    if (with_matrix) kl.setZero();
    for (int q = 0; q < cv.n_points(); ++q) {
      const double jxw = cv.JxW(q);
      double vt = 0, vy = 0, vtp = 0, vyp = 0;
      Eigen::Vector2d gt = Eigen::Vector2d::Zero(), gy = Eigen::Vector2d::Zero();
      for (int i = 0; i < nloc; ++i) {
        const double phi = shape.values(i, q);
        grads[i] = cv.shape_gradient(shape, i, q);
        vt += th[i] * phi;
        vy += y[i] * phi;
        vtp += thp[i] * phi;
        vyp += yp[i] * phi;
        gt += th[i] * grads[i];
        gy += y[i] * grads[i];
      }
      const OmegaPartials om = pr.reaction_terms(vt, vy);
      Eigen::Vector2d f = Eigen::Vector2d::Zero();
      for (double tau : kTimeGauss) f += 0.5 * source_at(pr, cv.point(q), t0 + tau * k);
      for (int i = 0; i < nloc; ++i) {
        const double phi = shape.values(i, q);
        r[i] += jxw * ((vt - vtp) * phi + k * gt.dot(grads[i]) - k * om.value * phi - k * f[0] * phi);
        r[nloc + i] += jxw * ((vy - vyp) * phi + k * inv_le * gy.dot(grads[i]) + k * om.value * phi - k * f[1] * phi);
        if (!with_matrix) continue;
        for (int j = 0; j < nloc; ++j) {
          const double mm = jxw * phi * shape.values(j, q);
          const double kk = jxw * grads[i].dot(grads[j]);
          kl(i, j) += mm + k * kk - k * om.d_theta * mm;
          kl(i, nloc + j) -= k * om.d_species * mm;
          kl(nloc + i, j) += k * om.d_theta * mm;
          kl(nloc + i, nloc + j) += mm + k * inv_le * kk + k * om.d_species * mm;
        }
      }
    }
    for (int face = 0; face < 4; ++face) {
      if (mesh.face_marker(c, face) != BoundaryId::robin) continue;
      fv.reinit(mesh, c, face);
      const ShapeTable& fs = fv.shapes(p);
      for (int q = 0; q < fv.n_points(); ++q) {
        double vt = 0;
        for (int i = 0; i < nloc; ++i) vt += th[i] * fs.values(i, q);
        for (int i = 0; i < nloc; ++i) {
          r[i] += fv.JxW(q) * k * kappa * vt * fs.values(i, q);
          if (!with_matrix) continue;
          for (int j = 0; j < nloc; ++j) kl(i, j) += fv.JxW(q) * k * kappa * fs.values(i, q) * fs.values(j, q);
        }
      }
    }
    const auto dofs = space.cell_dofs(c);
    const auto global = [&](int li) { return li < nloc ? dofs[li] : n + dofs[li - nloc]; };
    for (int i = 0; i < 2 * nloc; ++i) {
      sys.residual[global(i)] += r[i];
      if (!with_matrix) continue;
      for (int j = 0; j < 2 * nloc; ++j)
        if (kl(i, j) != 0.0) triplets.emplace_back(global(i), global(j), kl(i, j));
    }
  }
  if (with_matrix) {
    sys.jacobian.resize(2 * n, 2 * n);
    sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  }
  return sys;
}

Eigen::VectorXd goal_gradient(const Problem& pr, const FESpace& space, const Eigen::VectorXd& u) {
  const Mesh& mesh = space.mesh();
  const int p = space.order();
  const int nloc = space.dofs_per_cell();
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  CellValues cv(quadrature_points(p, p));
  const ShapeTable& shape = cv.shapes(p);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
  std::vector<double> th(nloc), y(nloc);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    cv.reinit(mesh, c);
    gather_local(space, u, c, th.data(), y.data());
    const auto dofs = space.cell_dofs(c);
    for (int q = 0; q < cv.n_points(); ++q) {
      double vt = 0, vy = 0;
      for (int i = 0; i < nloc; ++i) {
        vt += th[i] * shape.values(i, q);
        vy += y[i] * shape.values(i, q);
      }
      const OmegaPartials g = pr.goal_integrand(vt, vy);
      for (int i = 0; i < nloc; ++i) {
        out[dofs[i]] += cv.JxW(q) * g.d_theta * shape.values(i, q);
        out[n + dofs[i]] += cv.JxW(q) * g.d_species * shape.values(i, q);
      }
    }
  }
  return out;
}

Eigen::VectorXd mass_action(const FESpace& space, const Eigen::VectorXd& v) {
  const Mesh& mesh = space.mesh();
  const int p = space.order();
  const int nloc = space.dofs_per_cell();
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  CellValues cv(quadrature_points(p, p));
  const ShapeTable& shape = cv.shapes(p);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
  std::vector<double> th(nloc), y(nloc);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    cv.reinit(mesh, c);
    gather_local(space, v, c, th.data(), y.data());
    const auto dofs = space.cell_dofs(c);
    for (int q = 0; q < cv.n_points(); ++q) {
      double vt = 0, vy = 0;
      for (int i = 0; i < nloc; ++i) {
        vt += th[i] * shape.values(i, q);
        vy += y[i] * shape.values(i, q);
      }
      for (int i = 0; i < nloc; ++i) {
        out[dofs[i]] += cv.JxW(q) * vt * shape.values(i, q);
        out[n + dofs[i]] += cv.JxW(q) * vy * shape.values(i, q);
      }
    }
  }
  return out;
}

SparseMatrix condensation_matrix(const Condensation& cond) {
  const FESpace& space = cond.space();
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  const auto nf = static_cast<Eigen::Index>(cond.n_free());
  std::vector<Eigen::Triplet<double>> triplets;
  for (int comp = 0; comp < kComponents; ++comp)
    for (Eigen::Index d = 0; d < n; ++d)
      for (const auto& e : cond.expansion(d)) triplets.emplace_back(comp * n + d, comp * nf + e.index, e.weight);
  SparseMatrix c(2 * n, cond.n_reduced());
  c.setFromTriplets(triplets.begin(), triplets.end());
  return c;
}

Eigen::VectorXd boundary_vector(const Problem& pr, const FESpace& space, const Condensation& cond, double t) {
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index d = 0; d < n; ++d) {
    if (!cond.is_dirichlet(d)) continue;
    const Eigen::Vector2d g = pr.boundary(space.support_point(d), t);
    b[d] = g[0];
    b[n + d] = g[1];
  }
  return b;
}

Eigen::VectorXd initial_vector(const Problem& pr, const FESpace& space) {
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  Eigen::VectorXd v(2 * n);
  v.head(n) = space.interpolate([&](const Eigen::Vector2d& x) { return pr.initial(x)[0]; });
  v.tail(n) = space.interpolate([&](const Eigen::Vector2d& x) { return pr.initial(x)[1]; });
  return v;
}

}  // namespace pudwr
