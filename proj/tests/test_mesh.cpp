#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <set>

#include "hexpde/mesh.hpp"

using namespace hexpde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Interior faces must be shared by exactly two elements (mutually), boundary
// faces by one.
void check_face_consistency(const HexMesh& mesh) {
  static constexpr std::array<int, 6> opposite = {2, 3, 0, 1, 5, 4};
  std::int64_t boundary_count = 0;
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e)
    for (int f = 0; f < 6; ++f) {
      const std::int32_t nb = mesh.neighbors[e][f];
      if (nb < 0) {
        ++boundary_count;
      } else {
        REQUIRE(mesh.neighbors[nb][opposite[f]] == e);
      }
    }
  REQUIRE(boundary_count ==
          static_cast<std::int64_t>(mesh.boundary_faces.size()));
}

void check_indices_in_bounds(const HexMesh& mesh) {
  for (const auto& conn : mesh.elements_q2)
    for (std::int32_t v : conn) {
      REQUIRE(v >= 0);
      REQUIRE(v < mesh.n_nodes());
    }
}

std::int64_t count_vertices(const HexMesh& mesh) {
  std::set<std::int32_t> vertices;
  for (const auto& conn : mesh.elements_q2)
    vertices.insert(conn.begin(), conn.begin() + 8);
  return static_cast<std::int64_t>(vertices.size());
}

}  // namespace

TEST_CASE("cube mesh: counts, numbering and volume") {
  const HexMesh m1 = build_cube_mesh(1);
  REQUIRE(m1.n_elements() == 1);
  REQUIRE(m1.n_nodes() == 27);
  REQUIRE(count_vertices(m1) == 8);

  // local node i sits at the reference position mapped into the cell
  for (int i = 0; i < 27; ++i) {
    const Vec3& p = m1.nodes[m1.elements_q2[0][i]];
    for (int d = 0; d < 3; ++d)
      REQUIRE_THAT(p[d], WithinAbs(double(kQ2Nodes[i][d]), 1e-15));
  }

  const HexMesh m2 = build_cube_mesh(2);
  REQUIRE(m2.n_elements() == 8);
  REQUIRE(m2.n_nodes() == 125);  // (2n+1)^3
  REQUIRE(count_vertices(m2) == 27);

  // node numbering is lexicographic in (x, y, z), x fastest
  for (std::int64_t i = 0; i + 1 < m2.n_nodes(); ++i) {
    const Vec3& a = m2.nodes[i];
    const Vec3& b = m2.nodes[i + 1];
    const bool less = a[2] < b[2] || (a[2] == b[2] && a[1] < b[1]) ||
                      (a[2] == b[2] && a[1] == b[1] && a[0] < b[0]);
    REQUIRE(less);
  }

  // Q1 system dimension for n = 32 is 35,937; Q2 node count matches at n = 16
  const HexMesh m32 = build_cube_mesh(32);
  REQUIRE(count_vertices(m32) == 35937);
  REQUIRE(m32.n_nodes() == 65 * 65 * 65);
  const HexMesh m16 = build_cube_mesh(16);
  REQUIRE(m16.n_nodes() == 35937);

  REQUIRE_THAT(total_volume(m2), WithinRel(8.0, 1e-12));
  check_positive_jacobians(m2);
  check_face_consistency(m2);
  check_indices_in_bounds(m2);
  REQUIRE(m2.boundary_faces.size() == 24);  // 6 sides x 4 faces

  REQUIRE_THROWS_AS(build_cube_mesh(0), std::invalid_argument);
}

TEST_CASE("cube n=1 boundary: 6 faces, all nodes but the centre") {
  const HexMesh m = build_cube_mesh(1);
  REQUIRE(m.boundary_faces.size() == 6);
  REQUIRE(m.boundary_nodes.size() == 26);
  // the centre node (local 22, 1-based) is the only interior node
  const std::int32_t centre = m.elements_q2[0][21];
  for (std::int32_t b : m.boundary_nodes) REQUIRE(b != centre);
}

TEST_CASE("staircase mesh: counts, boundary and volume") {
  REQUIRE_THROWS_AS(build_staircase_mesh(3), std::invalid_argument);
  REQUIRE_THROWS_AS(build_staircase_mesh(0), std::invalid_argument);

  const HexMesh m2 = build_staircase_mesh(2);
  REQUIRE(m2.n_elements() == 6);  // 2x2x2 grid minus the 1x1x2 column
  check_face_consistency(m2);
  check_indices_in_bounds(m2);
  // enumeration of the 6-element mesh: 36 face slots, 7 interior faces
  REQUIRE(m2.boundary_faces.size() == 22);
  REQUIRE_THAT(total_volume(m2), WithinRel(6.0, 1e-12));

  const HexMesh m32 = build_staircase_mesh(32);
  REQUIRE(m32.n_elements() == 32 * 32 * 32 - 16 * 16 * 32);  // 24,576
  REQUIRE(count_vertices(m32) == 27489);

  // nodes strictly inside the removed quadrant are absent
  for (const Vec3& p : m2.nodes) REQUIRE(!(p[0] < 0.0 && p[1] < 0.0));
}

TEST_CASE("borehole mesh: layout, stretching and volume") {
  const double eps = 0.01;
  const HexMesh m = build_borehole_mesh(2, eps);
  REQUIRE(m.grid.cells[0] == 48);
  REQUIRE(m.grid.cells[1] == 32);
  REQUIRE(m.grid.cells[2] == 48);
  REQUIRE(m.n_elements() == 48 * 32 * 48 - 64);
  REQUIRE(count_vertices(m) == 49 * 33 * 49 - 16);
  check_face_consistency(m);
  REQUIRE_THAT(total_volume(m), WithinRel(8.0 - 4.0 * eps * eps, 1e-12));

  // spacing grows from h_min = eps at the hole to h_max = 0.0625 at the
  // boundary; the element aspect ratio peaks next to the hole at 6.25
  const auto& xs = m.grid.lines[0];
  REQUIRE_THAT(xs[23] - xs[22], WithinRel(eps, 1e-12));  // last cell into -eps
  double h_largest = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    h_largest = std::max(h_largest, xs[i + 1] - xs[i]);
  REQUIRE_THAT(h_largest, WithinRel(0.0625, 1e-12));
  REQUIRE_THAT(max_aspect_ratio(m), WithinRel(0.0625 / eps, 1e-10));

  // right of the hole: geometrically growing run (constant ratio), then
  // uniform h_max cells; the left side mirrors it
  std::vector<double> spacing;
  for (std::size_t i = 25; i + 1 < xs.size(); ++i)
    spacing.push_back(xs[i + 1] - xs[i]);
  REQUIRE(spacing.size() == 23);
  std::size_t n_geo = 0;
  while (n_geo < spacing.size() && spacing[n_geo] < 0.0625 * (1 - 1e-9))
    ++n_geo;
  REQUIRE(n_geo >= 2);
  const double ratio = spacing[1] / spacing[0];
  REQUIRE(ratio > 1.0);
  for (std::size_t i = 0; i + 1 < n_geo; ++i)
    REQUIRE_THAT(spacing[i + 1] / spacing[i], WithinRel(ratio, 1e-10));
  for (std::size_t i = n_geo; i < spacing.size(); ++i)
    REQUIRE_THAT(spacing[i], WithinRel(0.0625, 1e-12));
  for (std::size_t i = 0; i < spacing.size(); ++i)
    REQUIRE_THAT(spacing[i], WithinRel(xs[23 - i] - xs[22 - i], 1e-12));

  // grid lines meet the hole exactly
  REQUIRE_THAT(xs[23], WithinAbs(-eps, 1e-15));
  REQUIRE_THAT(xs[25], WithinAbs(eps, 1e-15));

  // higher level halves spacings and doubles cell counts
  const HexMesh m3 = build_borehole_mesh(3, eps);
  REQUIRE(m3.grid.cells[0] == 96);
  REQUIRE(m3.grid.cells[1] == 64);
  const auto& xs3 = m3.grid.lines[0];
  REQUIRE_THAT(xs3[47] - xs3[46], WithinRel(eps / 2, 1e-12));

  REQUIRE_THROWS_AS(build_borehole_mesh(1, eps), std::invalid_argument);
  REQUIRE_THROWS_AS(build_borehole_mesh(6, eps), std::invalid_argument);
  REQUIRE_THROWS_AS(build_borehole_mesh(2, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_borehole_mesh(2, 1.0), std::invalid_argument);
  // hole too wide for the graded layout (23 eps >= 1 - eps)
  REQUIRE_THROWS_AS(build_borehole_mesh(2, 0.2), std::invalid_argument);
}

TEST_CASE("classify_boundary rejects non-conforming connectivity") {
  HexMesh m = build_cube_mesh(1);
  m.elements_q2.push_back(m.elements_q2[0]);
  m.elements_q2.push_back(m.elements_q2[0]);  // face now shared three times
  REQUIRE_THROWS_AS(classify_boundary(m), std::runtime_error);
}

TEST_CASE("boundary nodes are exactly the nodes of boundary faces") {
  const HexMesh m = build_staircase_mesh(4);
  std::set<std::int32_t> expected;
  for (const auto& bf : m.boundary_faces)
    for (int n : face_q2_nodes(bf.face))
      expected.insert(m.elements_q2[bf.element][n]);
  REQUIRE(std::equal(expected.begin(), expected.end(),
                     m.boundary_nodes.begin(), m.boundary_nodes.end()));
}

TEST_CASE("mesh files round-trip and the text variant is written") {
  const HexMesh m = build_staircase_mesh(4);
  const std::string bin = "staircase4.hexmesh";
  const std::string txt = "staircase4.hexmesh.txt";
  save_mesh_binary(m, bin);
  save_mesh_text(m, txt);
  const HexMesh r = load_mesh_binary(bin);
  REQUIRE(r.domain_tag == m.domain_tag);
  REQUIRE(r.nodes == m.nodes);
  REQUIRE(r.elements_q2 == m.elements_q2);
  REQUIRE(r.boundary_nodes == m.boundary_nodes);
  REQUIRE(r.neighbors == m.neighbors);
  REQUIRE(r.grid.lines == m.grid.lines);
  REQUIRE(r.grid.cell_to_element == m.grid.cell_to_element);
  REQUIRE(r.boundary_faces.size() == m.boundary_faces.size());
  for (std::size_t i = 0; i < r.boundary_faces.size(); ++i) {
    REQUIRE(r.boundary_faces[i].element == m.boundary_faces[i].element);
    REQUIRE(r.boundary_faces[i].face == m.boundary_faces[i].face);
  }

  std::ifstream check(txt);
  std::string header;
  std::getline(check, header);
  REQUIRE(header == "hexpde mesh v1 staircase");

  std::remove(bin.c_str());
  std::remove(txt.c_str());

  REQUIRE_THROWS_AS(load_mesh_binary("does-not-exist.hexmesh"),
                    std::runtime_error);
}
