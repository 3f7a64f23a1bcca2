#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "pudwr/fespace.hpp"
#include "pudwr/linalg.hpp"

namespace pudwr {

struct ModelParams {
  double Le = 1.0;
  double alpha = 0.8;
  double beta = 10.0;
  double robin_k = 0.1;
  double denom_floor = 1e-8;
};

namespace detail {
void warn_denominator_clamped();
}

/// Arrhenius exponent argument with the denominator floor applied. `clamped`
/// reports whether the floor was hit.
template <typename Scalar>
Scalar arrhenius_exponent(const Scalar& theta, const ModelParams& p, bool* clamped = nullptr) {
  using std::abs;
  Scalar denom = 1.0 + p.alpha * (theta - 1.0);
  const bool hit = denom <= p.denom_floor;
  if (hit) {
    detail::warn_denominator_clamped();
    denom = Scalar(p.denom_floor);
  }
  if (clamped) *clamped = hit;
  return p.beta * (theta - 1.0) / denom;
}

/// Reaction rate (beta^2 / 2Le) Y exp(beta (theta-1) / (1 + alpha (theta-1))).
template <typename Scalar>
Scalar omega(const Scalar& theta, const Scalar& Y, const ModelParams& p) {
  using std::exp;
  return p.beta * p.beta / (2.0 * p.Le) * Y * exp(arrhenius_exponent(theta, p));
}

struct OmegaPartials {
  double value;
  double d_theta;
  double d_species;
};

inline OmegaPartials omega_jacobian(double theta, double Y, const ModelParams& p) {
  bool clamped = false;
  const double e = std::exp(arrhenius_exponent(theta, p, &clamped));
  const double c = p.beta * p.beta / (2.0 * p.Le);
  const double w = c * Y * e;
  double dtheta = 0.0;
  if (!clamped) {
    const double denom = 1.0 + p.alpha * (theta - 1.0);
    dtheta = w * p.beta / (denom * denom);
  }
  return {w, dtheta, c * e};
}

/// Everything that defines one initial-boundary value problem together with
/// its goal functional J(u) = 1/(T |Omega|) int_0^T int_Omega g(u).
struct Problem {
  enum class Kind { combustion, heat, heat_linear };
  Kind kind = Kind::combustion;
  std::string name;
  ModelParams params;
  bool reaction = true;
  double final_time = 60.0;
  double domain_measure = 1.0;
  BoundaryMask dirichlet{BoundaryId::dirichlet};

  using Pair = Eigen::Vector2d;
  std::function<Pair(const Eigen::Vector2d&)> initial;
  std::function<Pair(const Eigen::Vector2d&, double)> boundary;
  /// Volume source; empty when the problem has none.
  std::function<Pair(const Eigen::Vector2d&, double)> source;
  /// Closed-form goal value when known.
  std::optional<double> exact_goal;

  double goal_scale() const { return 1.0 / (final_time * domain_measure); }
  /// Goal integrand g and its partial derivatives.
  OmegaPartials goal_integrand(double theta, double Y) const {
    if (kind == Kind::combustion) return omega_jacobian(theta, Y, params);
    return {theta, 1.0, 0.0};
  }
  OmegaPartials reaction_terms(double theta, double Y) const {
    if (!reaction) return {0.0, 0.0, 0.0};
    return omega_jacobian(theta, Y, params);
  }
};

/// Channel flame: theta = 1, Y = 0 on the Dirichlet inflow, Robin cooling of
/// theta on the recesses, Arrhenius reaction, goal = mean reaction rate.
Problem combustion_problem(const ModelParams& params, double final_time, double domain_measure);
/// Heat equation on the unit square with theta = sin(pi x) sin(pi y) exp(-t),
/// Y = 0, homogeneous Dirichlet data; goal = space-time mean of theta.
Problem heat_problem(double final_time);
/// Heat equation with the steady solution theta = x (reproduced exactly by
/// every discretization); goal = 1/2.
Problem heat_linear_problem(double final_time);

double initial_theta(double x, const ModelParams& p);
double initial_species(double x, const ModelParams& p);

/// Number of Gauss points per direction for forms with trial order pu and
/// test/weight order pw.
inline int quadrature_points(int pu, int pw) { return std::max(pu, pw) + 2; }

/// Data of one time interval I_n = (t0, t0 + k] on mesh n. `u` is the value
/// at t_n, `u_prev` the value at t_{n-1} transferred to mesh n.
struct StepState {
  const Mesh* mesh = nullptr;
  double t0 = 0.0;
  double k = 0.0;
  CellFunction u;
  CellFunction u_prev;
};

/// Value of a weighted form, optionally localized on a cG(1) partition of unity.
struct FormValue {
  double total = 0.0;
  Eigen::VectorXd localized;  // one entry per PU dof; empty when not requested
};

/// F(w) - A(u, w) on one interval (jump term included; sign: residual = F - A).
/// With `pu`, each entry i holds the value for the weight w chi_i, hanging
/// PU functions folded onto their masters.
FormValue residual_form(const Problem& problem, const StepState& step, const TimeAffine<CellFunction>& weight,
                        const FESpace* pu = nullptr);

/// J'(u)(psi) - (psi(t_n^-), z_n - z_next) - int_{I_n} a'(u)(psi, z_n).
FormValue adjoint_form(const Problem& problem, const StepState& step, const CellFunction& z,
                       const CellFunction& z_next, const TimeAffine<CellFunction>& weight,
                       const FESpace* pu = nullptr);

/// Spatial integral of the goal integrand at one state.
double goal_integral(const Problem& problem, const Mesh& mesh, const CellFunction& u);

/// Full residual vector (A - F)(phi_i) and, if requested, the Jacobian for
/// one dG(0) step, both in the unconstrained numbering [theta; Y].
struct StepSystem {
  Eigen::VectorXd residual;
  SparseMatrix jacobian;
};
StepSystem assemble_step(const Problem& problem, const FESpace& space, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& u_prev, double t0, double k, bool with_matrix);

/// Full vector of int g'(u) phi_i (unscaled).
Eigen::VectorXd goal_gradient(const Problem& problem, const FESpace& space, const Eigen::VectorXd& u);
/// Full vector M v for the two-component mass matrix.
Eigen::VectorXd mass_action(const FESpace& space, const Eigen::VectorXd& v);

/// Sparse form of the condensation u = C v + b.
SparseMatrix condensation_matrix(const Condensation& cond);

/// Dirichlet data at time t as a full vector (zero away from Dirichlet dofs).
Eigen::VectorXd boundary_vector(const Problem& problem, const FESpace& space, const Condensation& cond, double t);
/// Interpolated initial values.
Eigen::VectorXd initial_vector(const Problem& problem, const FESpace& space);

}  // namespace pudwr
