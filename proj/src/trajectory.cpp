#include "pudwr/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <unistd.h>

namespace pudwr {

TimePartition::TimePartition(double t0, std::vector<double> steps) : steps_(std::move(steps)), nodes_{t0} {
  for (double k : steps_) {
    if (!(k > 0)) throw std::invalid_argument("TimePartition: steps must be positive");
    nodes_.push_back(nodes_.back() + k);
  }
}

TimePartition TimePartition::uniform(double final_time, std::size_t intervals) {
  if (intervals == 0 || !(final_time > 0)) throw std::invalid_argument("TimePartition: empty partition");
  return TimePartition(0.0, std::vector<double>(intervals, final_time / static_cast<double>(intervals)));
}

TimePartition TimePartition::bisect(std::span<const std::size_t> marked, std::vector<std::size_t>* parent) const {
  std::vector<char> split(size(), 0);
  for (auto i : marked) {
    if (i >= size()) throw std::out_of_range("TimePartition::bisect: interval index");
    split[i] = 1;
  }
  std::vector<double> steps;
  if (parent) parent->clear();
  for (std::size_t i = 0; i < size(); ++i) {
    const int pieces = split[i] ? 2 : 1;
    for (int j = 0; j < pieces; ++j) {
      steps.push_back(steps_[i] / pieces);
      if (parent) parent->push_back(i);
    }
  }
  return TimePartition(nodes_.front(), std::move(steps));
}

SpaceTimeMesh SpaceTimeMesh::uniform(MeshPtr mesh, TimePartition partition) {
  SpaceTimeMesh stm{std::move(partition), {}};
  stm.meshes.assign(stm.partition.size(), std::move(mesh));
  return stm;
}

std::size_t SpaceTimeMesh::total_cells() const {
  std::size_t n = 0;
  for (const auto& m : meshes) n += m->n_cells();
  return n;
}

std::size_t SpaceTimeMesh::total_dofs(int order) const {
  SpaceCache cache;
  std::size_t n = 0;
  for (const auto& m : meshes) n += kComponents * cache.get(m, order)->n_dofs();
  return n;
}

SpacePtr SpaceCache::get(const MeshPtr& mesh, int order) {
  auto& slot = spaces_[{mesh.get(), order}];
  if (!slot) slot = std::make_shared<const FESpace>(mesh, order);
  return slot;
}

const Condensation& SpaceCache::condensation(const SpacePtr& space, BoundaryMask dirichlet) {
  auto& slot = conds_[space.get()];
  if (!slot) slot = std::make_unique<Condensation>(*space, dirichlet);
  return *slot;
}

std::uint64_t checksum(const Eigen::VectorXd& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Trajectory::Trajectory(Kind kind, std::size_t intervals, Storage storage, std::filesystem::path dir)
    : kind_(kind), storage_(storage), dir_(std::move(dir)), spaces_(intervals), checksums_(intervals, 0),
      lengths_(intervals, 0) {
  if (storage_ == Storage::memory) {
    data_.resize(intervals);
    return;
  }
  static std::atomic<int> counter{0};
  if (dir_.empty()) dir_ = std::filesystem::temp_directory_path();
  dir_ /= "pudwr_traj_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  std::filesystem::create_directories(dir_);
  cleanup_ = std::shared_ptr<void>(nullptr, [dir = dir_](void*) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  });
}

std::filesystem::path Trajectory::file(std::size_t interval) const {
  return dir_ / ((kind_ == Kind::primal ? "u_" : "z_") + std::to_string(interval) + ".bin");
}

void Trajectory::set_initial(SpacePtr space, Eigen::VectorXd v) {
  initial_space_ = std::move(space);
  initial_ = std::move(v);
}

void Trajectory::store(std::size_t interval, SpacePtr space, const Eigen::VectorXd& v) {
  if (interval >= spaces_.size()) throw std::out_of_range("Trajectory::store: interval index");
  if (v.size() != static_cast<Eigen::Index>(kComponents * space->n_dofs()))
    throw std::invalid_argument("Trajectory::store: vector does not match the space");
  spaces_[interval] = std::move(space);
  lengths_[interval] = static_cast<std::uint64_t>(v.size());
  checksums_[interval] = checksum(v);
  if (storage_ == Storage::memory) {
    data_[interval] = v;
    return;
  }
  std::ofstream out(file(interval), std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) throw std::runtime_error("Trajectory: cannot write " + file(interval).string());
  out.close();
  append_index(interval);
}

Eigen::VectorXd Trajectory::load(std::size_t interval) const {
  if (interval >= spaces_.size() || !has(interval))
    throw std::out_of_range("Trajectory::load: interval " + std::to_string(interval) + " not stored");
  if (storage_ == Storage::memory) return data_[interval];
  Eigen::VectorXd v(static_cast<Eigen::Index>(lengths_[interval]));
  std::ifstream in(file(interval), std::ios::binary);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw std::runtime_error("Trajectory: cannot read " + file(interval).string());
  if (checksum(v) != checksums_[interval])
    throw std::runtime_error("Trajectory: checksum mismatch in " + file(interval).string());
  return v;
}

void Trajectory::release(std::size_t interval) {
  lengths_[interval] = 0;
  if (storage_ == Storage::memory) {
    data_[interval] = Eigen::VectorXd();
    return;
  }
  std::error_code ec;
  std::filesystem::remove(file(interval), ec);
}

// One line per stored interval; a re-stored interval appears again and the
// last line wins.
void Trajectory::append_index(std::size_t i) const {
  const auto path = dir_ / (kind_ == Kind::primal ? "u_index.txt" : "z_index.txt");
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (fresh) out << "# interval mesh_id length checksum\n";
  out << i << ' ' << spaces_[i]->mesh().id() << ' ' << lengths_[i] << ' ' << std::hex << checksums_[i] << std::dec
      << '\n';
}

TimeAffine<Eigen::VectorXd> temporal_linear_interp(const Trajectory& traj, std::size_t i) {
  const FESpace& here = *traj.space(i);
  Eigen::VectorXd own = traj.load(i);
  if (traj.kind() == Trajectory::Kind::primal) {
    Eigen::VectorXd before = i == 0 ? transfer_pair(*traj.initial_space(), traj.initial(), here)
                                    : transfer_pair(*traj.space(i - 1), traj.load(i - 1), here);
    return {std::move(before), std::move(own)};
  }
  Eigen::VectorXd after = i + 1 == traj.size() ? Eigen::VectorXd::Zero(own.size())
                                               : transfer_pair(*traj.space(i + 1), traj.load(i + 1), here);
  return {std::move(own), std::move(after)};
}

}  // namespace pudwr
