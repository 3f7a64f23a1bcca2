#include <doctest.h>

#include <set>

#include "pudwr/fespace.hpp"
#include "pudwr/io.hpp"
#include "pudwr/mesh.hpp"

using namespace pudwr;

TEST_CASE("channel mesh has the calibrated cell count") {
  const MeshPtr mesh = build_channel_geometry({});
  CHECK(mesh->n_cells() == 896);
  CHECK(mesh_area(*mesh) == doctest::Approx(60.0 * 15.0 - 2 * 15.0 * 3.75));
}

TEST_CASE("channel mesh entity counts satisfy the Euler relation") {
  const MeshPtr mesh = build_channel_geometry({});
  const FESpace q1(mesh, 1), q2(mesh, 2);
  const auto v = static_cast<long>(q1.n_dofs());
  const long cells = static_cast<long>(mesh->n_cells());
  const long e = static_cast<long>(q2.n_dofs()) - v - cells;
  CHECK(v == 985);
  CHECK(e == 1880);
  CHECK(v - e + cells == 1);
  CHECK(2 * q1.n_dofs() == 1970);
  CHECK(2 * q2.n_dofs() == 7522);
}

TEST_CASE("boundary markers of the channel") {
  const MeshPtr mesh = build_channel_geometry({});
  double dirichlet = 0, robin = 0, neumann = 0;
  for (std::size_t c = 0; c < mesh->n_cells(); ++c)
    for (int f = 0; f < 4; ++f) {
      const BoundaryId id = mesh->face_marker(c, f);
      if (id == BoundaryId::interior) continue;
      const Eigen::Vector2d a = mesh->map(c, f == 0 || f == 3 ? Eigen::Vector2d(0, 0) : Eigen::Vector2d(1, 1));
      const Eigen::Vector2d b = mesh->map(c, f == 0 ? Eigen::Vector2d(1, 0)
                                             : f == 1 ? Eigen::Vector2d(1, 0)
                                             : f == 2 ? Eigen::Vector2d(0, 1)
                                                      : Eigen::Vector2d(0, 1));
      const double len = (a - b).norm();
      if (id == BoundaryId::dirichlet) {
        CHECK(a.x() == doctest::Approx(0.0));
        dirichlet += len;
      } else if (id == BoundaryId::robin) {
        robin += len;
      } else {
        neumann += len;
      }
    }
  CHECK(dirichlet == doctest::Approx(15.0));
  // two recesses, each with two side walls and a floor
  CHECK(robin == doctest::Approx(2 * (3.75 + 15.0 + 3.75)));
  CHECK(neumann == doctest::Approx(15.0 + 2 * (60.0 - 15.0)));
}

TEST_CASE("zero notch depth gives a plain rectangle without Robin faces") {
  ChannelGeometry g;
  g.notch_depth = 0.0;
  const MeshPtr mesh = build_channel_geometry(g);
  CHECK(mesh_area(*mesh) == doctest::Approx(900.0));
  for (std::size_t c = 0; c < mesh->n_cells(); ++c)
    for (int f = 0; f < 4; ++f) CHECK(mesh->face_marker(c, f) != BoundaryId::robin);
}

TEST_CASE("invalid geometry is rejected") {
  ChannelGeometry g;
  g.notch_depth = 8.0;
  CHECK_THROWS(build_channel_geometry(g));
  g = {};
  g.notch_x0 = 40.0;
  CHECK_THROWS(build_channel_geometry(g));
}

TEST_CASE("local refinement keeps patches and one irregularity") {
  MeshPtr mesh = Mesh::uniform(rectangle_coarse_mesh(0, 1, 0, 1, 2, 2, BoundaryId::dirichlet), 1);
  const double area = mesh_area(*mesh);
  for (int round = 0; round < 4; ++round) {
    // always the cell nearest the origin
    std::size_t best = 0;
    for (std::size_t c = 0; c < mesh->n_cells(); ++c)
      if (mesh->center(c).norm() < mesh->center(best).norm()) best = c;
    const std::size_t before = mesh->n_cells();
    const std::size_t marked[] = {best};
    mesh = refine(*mesh, marked);
    CHECK(mesh->n_cells() > before);
    CHECK(mesh->is_one_irregular());
    CHECK(mesh->has_patch_structure());
    CHECK(mesh_area(*mesh) == doctest::Approx(area));
  }
  for (const auto& group : mesh->patch_groups())
    for (unsigned i = 0; i < 4; ++i) CHECK(mesh->cell(group[i]).child_index() == i);
}

TEST_CASE("refining one cell refines its whole sibling group") {
  const MeshPtr mesh = Mesh::uniform(rectangle_coarse_mesh(0, 1, 0, 1, 1, 1, BoundaryId::neumann), 1);
  const std::size_t marked[] = {2};
  const MeshPtr fine = refine(*mesh, marked);
  CHECK(fine->n_cells() == 16);
}

TEST_CASE("cell key packing round trips") {
  const CellKey k{7, 5, 19, 30};
  CHECK(CellKey::unpack(k.pack()) == k);
  CHECK(k.child(1, 0).parent() == k);
  CHECK(k.child(1, 1).child_index() == 3);
}

TEST_CASE("face neighbors across a level jump") {
  MeshPtr mesh = Mesh::uniform(rectangle_coarse_mesh(0, 2, 0, 1, 2, 1, BoundaryId::neumann), 1);
  // refine the left root's patch
  std::vector<std::size_t> left;
  for (std::size_t c = 0; c < mesh->n_cells(); ++c)
    if (mesh->center(c).x() < 1) left.push_back(c);
  mesh = refine(*mesh, left);
  std::set<FaceNeighbor::Kind> kinds;
  for (std::size_t c = 0; c < mesh->n_cells(); ++c)
    for (int f = 0; f < 4; ++f) kinds.insert(mesh->face_neighbor(c, f).kind);
  CHECK(kinds.count(FaceNeighbor::Kind::coarser) == 1);
  CHECK(kinds.count(FaceNeighbor::Kind::finer) == 1);
}
