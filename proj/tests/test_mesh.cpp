#include <catch2/catch_amalgamated.hpp>

#include <hdgmax/mesh.hpp>

#include <sstream>

using namespace hdgmax;

namespace {

int boundary_count(const MeshTopology &m) {
  return static_cast<int>(m.boundary_faces.size());
}

double inradius(const MeshTopology &m, int e) {
  const Vec3 a = m.tet_vertex(e, 0), b = m.tet_vertex(e, 1),
             c = m.tet_vertex(e, 2), d = m.tet_vertex(e, 3);
  const double vol = std::abs((b - a).cross(c - a).dot(d - a)) / 6.0;
  double area = 0.5 * ((b - a).cross(c - a).norm() + (b - a).cross(d - a).norm() +
                       (c - a).cross(d - a).norm() + (c - b).cross(d - b).norm());
  return 3.0 * vol / area;
}

} // namespace

TEST_CASE("box mesh counts", "[mesh]") {
  const auto m1 = build_box_mesh(1);
  CHECK(m1.n_cells() == 6);
  CHECK(m1.n_faces() == 18);
  CHECK(m1.n_interior_faces() == 6);
  CHECK(boundary_count(m1) == 12);

  const auto m2 = build_box_mesh(2);
  CHECK(m2.n_cells() == 48);
  CHECK(m2.n_faces() == 120);
  CHECK(m2.n_interior_faces() == 72);
  CHECK(boundary_count(m2) == 48);

  const auto m4 = build_box_mesh(4);
  CHECK(m4.n_cells() == 384);
  CHECK(m4.n_faces() == 864);
}

TEST_CASE("lshape mesh counts", "[mesh]") {
  const auto m2 = build_lshape_mesh(2);
  CHECK(m2.n_cells() == 36);
  CHECK(m2.n_faces() == 94);
  CHECK(m2.n_interior_faces() == 50);
  CHECK(boundary_count(m2) == 44);
  CHECK(m2.volume == Catch::Approx(6.0).epsilon(1e-12));

  const auto m4 = build_lshape_mesh(4);
  CHECK(m4.n_cells() == 288);
  CHECK(m4.n_faces() == 664);
}

TEST_CASE("mesh volumes and orientation", "[mesh]") {
  const auto m = build_box_mesh(3);
  CHECK(m.volume == Catch::Approx(1.0).epsilon(1e-12));
  for (int e = 0; e < m.n_cells(); e++) {
    const Vec3 a = m.tet_vertex(e, 0), b = m.tet_vertex(e, 1),
               c = m.tet_vertex(e, 2), d = m.tet_vertex(e, 3);
    CHECK((b - a).cross(c - a).dot(d - a) > 0.0);
  }
}

TEST_CASE("Euler face count identity", "[mesh]") {
  for (const auto &m : {build_box_mesh(1), build_box_mesh(3), build_lshape_mesh(2),
                        build_lshape_mesh(4)})
    CHECK(4 * m.n_cells() == 2 * m.n_interior_faces() + boundary_count(m));
}

TEST_CASE("refinement nesting of counts", "[mesh]") {
  CHECK(build_box_mesh(2).n_cells() == 8 * build_box_mesh(1).n_cells());
  CHECK(build_box_mesh(4).n_cells() == 8 * build_box_mesh(2).n_cells());
}

TEST_CASE("face frames are orthonormal and oriented", "[mesh]") {
  const auto m = build_lshape_mesh(2);
  for (const auto &f : m.faces) {
    CHECK(f.n.norm() == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(f.t1.norm() == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(f.t2.norm() == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(f.t1.dot(f.t2)) < 1e-14);
    CHECK(std::abs(f.t1.dot(f.n)) < 1e-14);
    CHECK(std::abs(f.t2.dot(f.n)) < 1e-14);
    CHECK((f.t1.cross(f.t2) - f.n).norm() < 1e-14);
  }
}

TEST_CASE("boundary normals point outward", "[mesh]") {
  const auto m = build_box_mesh(2);
  int checked = 0;
  for (int fi : m.boundary_faces) {
    const auto &f = m.faces[fi];
    bool z0 = true;
    for (int v : f.v) z0 = z0 && m.vertices[v].z() == 0.0;
    if (z0) {
      CHECK((f.n - Vec3(0, 0, -1)).norm() < 1e-14);
      checked++;
    }
  }
  CHECK(checked == 8);
}

TEST_CASE("boundary edge frames", "[mesh]") {
  const auto m = build_lshape_mesh(2);
  for (int fi : m.boundary_faces) {
    const auto &f = m.faces[fi];
    const Vec3 centroid = (m.vertices[f.v[0]] + m.vertices[f.v[1]] + m.vertices[f.v[2]]) / 3.0;
    for (const auto &ed : f.edges) {
      REQUIRE(ed.a >= 0);
      CHECK(std::abs(ed.n_FE.dot(ed.t_E)) < 1e-14);
      CHECK(std::abs(ed.n_FE.dot(f.n)) < 1e-14);
      CHECK(ed.n_FE.norm() == Catch::Approx(1.0).epsilon(1e-14));
      const Vec3 mid = 0.5 * (m.vertices[ed.a] + m.vertices[ed.b]);
      CHECK(ed.n_FE.dot(mid - centroid) > 0.0);
    }
  }
}

TEST_CASE("interior faces shared by exactly two tets", "[mesh]") {
  const auto m = build_box_mesh(2);
  std::vector<int> uses(m.n_faces(), 0);
  for (int e = 0; e < m.n_cells(); e++)
    for (int i = 0; i < 4; i++) uses[m.tet_faces[e][i]]++;
  for (int fi = 0; fi < m.n_faces(); fi++)
    CHECK(uses[fi] == (m.faces[fi].boundary() ? 1 : 2));
}

TEST_CASE("shape regularity bounded", "[mesh]") {
  for (const auto &m : {build_box_mesh(2), build_lshape_mesh(4)})
    for (int e = 0; e < m.n_cells(); e++)
      CHECK(m.h_T[e] / inradius(m, e) <= 20.0);
}

TEST_CASE("reentrant edge lies on mesh lines", "[mesh]") {
  const auto m = build_lshape_mesh(4);
  int on_axis = 0;
  for (const auto &p : m.vertices)
    if (p.x() == 0.0 && p.y() == 0.0) on_axis++;
  CHECK(on_axis == 5);  // z = -1,-0.5,0,0.5,1
}

TEST_CASE("invalid mesh parameters rejected", "[mesh]") {
  CHECK_THROWS_AS(build_box_mesh(0), config_error);
  CHECK_THROWS_AS(build_lshape_mesh(3), config_error);
  CHECK_THROWS_AS(build_lshape_mesh(0), config_error);
}

TEST_CASE("mesh construction is deterministic", "[mesh]") {
  const auto a = build_lshape_mesh(2);
  const auto b = build_lshape_mesh(2);
  REQUIRE(a.n_faces() == b.n_faces());
  for (int fi = 0; fi < a.n_faces(); fi++) {
    CHECK(a.faces[fi].v == b.faces[fi].v);
    CHECK(a.faces[fi].n == b.faces[fi].n);
  }
}

TEST_CASE("mesh dump format", "[mesh]") {
  const auto m = build_box_mesh(1);
  std::ostringstream os;
  dump_mesh(m, os);
  std::istringstream is(os.str());
  std::string word;
  int count;
  is >> word >> count;
  CHECK(word == "vertices");
  CHECK(count == 8);
  for (int i = 0; i < 3 * count; i++) {
    double x;
    is >> x;
  }
  is >> word >> count;
  CHECK(word == "tets");
  CHECK(count == 6);
}
