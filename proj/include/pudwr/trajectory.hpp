#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pudwr/fespace.hpp"

namespace pudwr {

/// Intervals I_i = (t_i, t_{i+1}], i = 0..M-1 (zero based).
class TimePartition {
 public:
  TimePartition() = default;
  TimePartition(double t0, std::vector<double> steps);
  static TimePartition uniform(double final_time, std::size_t intervals);

  std::size_t size() const { return steps_.size(); }
  double k(std::size_t i) const { return steps_[i]; }
  /// Left end point of interval i (i == size() gives the final time).
  double t(std::size_t i) const { return nodes_[i]; }
  double final_time() const { return nodes_.back(); }
  std::span<const double> steps() const { return steps_; }

  /// Splits every marked interval into two halves. `parent` receives, for
  /// every new interval, the index of the interval it came from.
  TimePartition bisect(std::span<const std::size_t> marked, std::vector<std::size_t>* parent = nullptr) const;

 private:
  std::vector<double> steps_;
  std::vector<double> nodes_{0.0};
};

/// Time partition together with one mesh per interval.
struct SpaceTimeMesh {
  TimePartition partition;
  std::vector<MeshPtr> meshes;

  static SpaceTimeMesh uniform(MeshPtr mesh, TimePartition partition);
  std::size_t size() const { return meshes.size(); }
  /// Total number of spatial cells summed over the intervals.
  std::size_t total_cells() const;
  /// Sum over intervals of the scalar dof count for order p times 2 components.
  std::size_t total_dofs(int order) const;
};

/// Shares FE spaces between intervals that use the same mesh.
class SpaceCache {
 public:
  SpacePtr get(const MeshPtr& mesh, int order);
  const Condensation& condensation(const SpacePtr& space, BoundaryMask dirichlet);
  void clear() {
    spaces_.clear();
    conds_.clear();
  }

 private:
  std::map<std::pair<const Mesh*, int>, SpacePtr> spaces_;
  std::map<const FESpace*, std::unique_ptr<Condensation>> conds_;
};

/// Per-interval coefficient vectors on their interval spaces, kept in memory
/// or spilled to one binary file per interval with a text index. Spill files
/// live in a private directory (below `dir` if given) removed on destruction.
class Trajectory {
 public:
  enum class Kind { primal, adjoint };
  enum class Storage { memory, disk };

  Trajectory() = default;
  Trajectory(Kind kind, std::size_t intervals, Storage storage = Storage::memory, std::filesystem::path dir = {});

  Kind kind() const { return kind_; }
  std::size_t size() const { return spaces_.size(); }

  void set_initial(SpacePtr space, Eigen::VectorXd v);
  const Eigen::VectorXd& initial() const { return initial_; }
  const SpacePtr& initial_space() const { return initial_space_; }

  void store(std::size_t interval, SpacePtr space, const Eigen::VectorXd& v);
  Eigen::VectorXd load(std::size_t interval) const;
  const SpacePtr& space(std::size_t interval) const { return spaces_[interval]; }
  bool has(std::size_t interval) const { return spaces_[interval] != nullptr && lengths_[interval] > 0; }
  /// Drops the vector of an interval (memory or file); its space stays known.
  void release(std::size_t interval);

 private:
  std::filesystem::path file(std::size_t interval) const;
  void append_index(std::size_t interval) const;

  Kind kind_ = Kind::primal;
  Storage storage_ = Storage::memory;
  std::filesystem::path dir_;
  std::shared_ptr<void> cleanup_;  // removes the spill directory with the last owner
  SpacePtr initial_space_;
  Eigen::VectorXd initial_;
  std::vector<SpacePtr> spaces_;
  std::vector<Eigen::VectorXd> data_;
  std::vector<std::uint64_t> checksums_;
  std::vector<std::uint64_t> lengths_;
};

/// 64-bit FNV-1a over the raw bytes of a vector.
std::uint64_t checksum(const Eigen::VectorXd& v);

/// i_k^(1) on interval i as a time-affine coefficient pair on the space of
/// interval i. Primal trajectories interpolate between u_{i-1} (the initial
/// vector for i = 0) at t_i and u_i at t_{i+1}; adjoint trajectories between
/// z_i at t_i and z_{i+1} (zero after the last interval) at t_{i+1}.
TimeAffine<Eigen::VectorXd> temporal_linear_interp(const Trajectory& traj, std::size_t interval);

}  // namespace pudwr
