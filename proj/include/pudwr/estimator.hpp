#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pudwr/model.hpp"
#include "pudwr/timestep.hpp"

namespace pudwr {

enum class Variant { cg1_cg1, cg1_cg2, cg2_cg2 };

inline int primal_order(Variant v) { return v == Variant::cg2_cg2 ? 2 : 1; }
inline int adjoint_order(Variant v) { return v == Variant::cg1_cg1 ? 1 : 2; }
std::string to_string(Variant v);
/// Parses "cg1cg1", "cg1cg2" or "cg2cg2".
Variant parse_variant(const std::string& name);

/// Localized indicators eta_i^n on the cG(1) dofs of every interval mesh,
/// split into temporal and spatial parts, together with the same estimator
/// evaluated without localization.
struct IndicatorField {
  std::vector<SpacePtr> pu;
  std::vector<Eigen::VectorXd> temporal;  // may be empty when not kept
  std::vector<Eigen::VectorXd> spatial;
  std::vector<double> temporal_sum;  // sum_i eta_i^n
  std::vector<double> spatial_sum;
  std::vector<double> temporal_global;  // chi = 1
  std::vector<double> spatial_global;

  std::size_t size() const { return temporal_sum.size(); }
  bool has_localized() const { return !temporal.empty(); }
  double eta_k() const;
  double eta_h() const;
  double eta() const { return eta_k() + eta_h(); }
  /// Totals of the localized indicators (equal to eta_k, eta_h up to round-off).
  double localized_k() const;
  double localized_h() const;
  /// eta_i^n = temporal + spatial on interval n.
  Eigen::VectorXd combined(std::size_t n) const;
};

struct EstimatorOptions {
  bool keep_localized = true;
};

/// Builds the weights of the chosen variant from the trajectories and
/// evaluates the primal estimators eta_k, eta_h (weights from z).
IndicatorField evaluate_primal(const Problem& problem, Variant variant, const SpaceTimeMesh& stm,
                               const Trajectory& u, const Trajectory& z, SpaceCache& cache,
                               const EstimatorOptions& options = {});
/// Adjoint estimators eta*_k, eta*_h (weights from u).
IndicatorField evaluate_adjoint(const Problem& problem, Variant variant, const SpaceTimeMesh& stm,
                                const Trajectory& u, const Trajectory& z, SpaceCache& cache,
                                const EstimatorOptions& options = {});

/// (primal + adjoint) / 2, entrywise.
IndicatorField combine_full(const IndicatorField& primal, const IndicatorField& adjoint);

inline double effectivity(double eta, double error) { return eta / error; }

struct Aggregate {
  std::vector<Eigen::VectorXd> cells;  // eta_K^n = sum of the four vertex indicators
  std::vector<double> intervals;       // eta^n = sum_i eta_i^n
  double total = 0.0;
};
enum class Part { temporal, spatial, both };
Aggregate aggregate(const IndicatorField& field, Part part = Part::both);
/// Cell indicators of one interval from dof indicators.
Eigen::VectorXd cell_indicators(const FESpace& pu, const Eigen::VectorXd& dof_values);

/// Weights of one interval as used by the estimators; exposed for tests.
struct IntervalWeights {
  StepState state;  // linearization point on the interval mesh (cG(1) or cG(2))
  CellFunction z;
  CellFunction z_next;
  TimeAffine<CellFunction> primal_temporal;
  TimeAffine<CellFunction> primal_spatial;
  TimeAffine<CellFunction> adjoint_temporal;
  TimeAffine<CellFunction> adjoint_spatial;
};

/// u_n, u_{n-1} and z_n, z_{n+1} must already live on the interval spaces.
IntervalWeights build_weights(Variant variant, const FESpace& pu_space, const FESpace& u_space,
                              const FESpace& z_space, const Eigen::VectorXd& u_n, const Eigen::VectorXd& u_prev,
                              const Eigen::VectorXd& z_n, const Eigen::VectorXd& z_next, double t0, double k);

}  // namespace pudwr
