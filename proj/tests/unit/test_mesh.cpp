#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "ensflow/mesh.hpp"
#include "support.hpp"

using namespace ensflow;

namespace {

// Minimal Gmsh v2.2 reader used as an oracle: node coordinates by id, and
// element records as (type, first tag, node ids).
struct RefMesh {
  std::map<int, Point> nodes;
  std::vector<std::pair<int, std::vector<int>>> lines;
  std::vector<std::vector<int>> triangles;
};

RefMesh reference_read(const std::string& path) {
  std::ifstream in(path);
  RefMesh m;
  std::string tok;
  while (in >> tok) {
    if (tok == "$Nodes") {
      int n;
      in >> n;
      for (int i = 0; i < n; ++i) {
        int id;
        double x, y, z;
        in >> id >> x >> y >> z;
        m.nodes[id] = {x, y};
      }
    } else if (tok == "$Elements") {
      int n;
      in >> n;
      for (int i = 0; i < n; ++i) {
        int id, type, ntags;
        in >> id >> type >> ntags;
        std::vector<int> tagv(ntags);
        for (int& t : tagv) in >> t;
        const int nv = type == 1 ? 2 : 3;
        std::vector<int> v(nv);
        for (int& x : v) in >> x;
        if (type == 1) m.lines.push_back({tagv[0], v});
        if (type == 2) m.triangles.push_back(v);
      }
    }
  }
  return m;
}

double shoelace_boundary_area(const Mesh& mesh) {
  // Orient each boundary edge as it appears in its counter-clockwise triangle.
  double a = 0.0;
  for (const auto& e : mesh.boundary_edges()) {
    const auto& t = mesh.triangles()[e.triangle];
    int p = e.vertices[0], q = e.vertices[1];
    for (int k = 0; k < 3; ++k) {
      if (t[k] == q && t[(k + 1) % 3] == p) std::swap(p, q);
    }
    const Point& x = mesh.vertices()[p];
    const Point& y = mesh.vertices()[q];
    a += 0.5 * (x[0] * y[1] - y[0] * x[1]);
  }
  return a;
}

std::map<std::pair<int, int>, int> directed_edge_counts(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> c;
  for (const auto& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) ++c[{t[k], t[(k + 1) % 3]}];
  }
  return c;
}

MeshError::Kind import_error_kind(const std::string& file) {
  try {
    read_mesh_file(test::data_path(file));
  } catch (const MeshError& e) {
    return e.kind();
  }
  FAIL("expected a MeshError for " << file);
  return MeshError::Kind::kInvalidArgument;
}

}  // namespace

TEST_CASE("unit square counts") {
  const Mesh m1 = generate_unit_square(1);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_triangles() == 2);
  CHECK(m1.boundary_edges().size() == 4);

  const Mesh m2 = generate_unit_square(2);
  CHECK(m2.num_vertices() == 9);
  CHECK(m2.num_triangles() == 8);

  for (int n : {1, 3, 7}) {
    const Mesh m = generate_unit_square(n);
    CHECK(m.num_vertices() == (n + 1) * (n + 1));
    CHECK(m.num_triangles() == 2 * n * n);
    CHECK(m.boundary_edges().size() == static_cast<std::size_t>(4 * n));
    std::map<int, int> per_tag;
    for (const auto& e : m.boundary_edges()) ++per_tag[e.tag];
    CHECK(per_tag[tags::kBottom] == n);
    CHECK(per_tag[tags::kRight] == n);
    CHECK(per_tag[tags::kTop] == n);
    CHECK(per_tag[tags::kLeft] == n);
  }
}

TEST_CASE("unit square rejects n = 0") {
  CHECK_THROWS_AS(generate_unit_square(0), MeshError);
}

TEST_CASE("metrics of the unit square") {
  const MeshMetrics m10 = mesh_metrics(generate_unit_square(10));
  CHECK(m10.h == doctest::Approx(std::sqrt(2.0) / 10).epsilon(1e-14));
  CHECK(m10.diam == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(m10.area == doctest::Approx(1.0).epsilon(1e-14));

  const MeshMetrics m1 = mesh_metrics(generate_unit_square(1));
  CHECK(m1.h == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("triangles are positively oriented and edge-to-edge") {
  const std::vector<Mesh> meshes = [] {
    std::vector<Mesh> v;
    v.push_back(generate_unit_square(5));
    v.push_back(generate_channel(2.2, 0.41, 22, 4, Hole{{0.2, 0.2}, 0.05}));
    v.push_back(generate_contraction_channel(0.25));
    return v;
  }();
  for (const Mesh& mesh : meshes) {
    for (int t = 0; t < mesh.num_triangles(); ++t) CHECK(mesh.signed_area(t) > 0.0);
    const auto counts = directed_edge_counts(mesh);
    int boundary = 0;
    for (const auto& [e, c] : counts) {
      CHECK(c == 1);
      if (!counts.count({e.second, e.first})) ++boundary;
    }
    CHECK(boundary == static_cast<int>(mesh.boundary_edges().size()));
    CHECK(mesh_metrics(mesh).area == doctest::Approx(shoelace_boundary_area(mesh)).epsilon(1e-12));
  }
}

TEST_CASE("channel without hole matches the unit square topology") {
  const Mesh c = generate_channel(1.0, 1.0, 2, 2);
  const Mesh s = generate_unit_square(2);
  REQUIRE(c.num_vertices() == s.num_vertices());
  REQUIRE(c.num_triangles() == s.num_triangles());
  // Same triangles as vertex coordinate sets.
  auto key = [](const Mesh& m, int t) {
    std::vector<std::pair<double, double>> v;
    for (int k : m.triangles()[t]) v.push_back({m.vertices()[k][0], m.vertices()[k][1]});
    std::sort(v.begin(), v.end());
    return v;
  };
  std::vector<std::vector<std::pair<double, double>>> a, b;
  for (int t = 0; t < c.num_triangles(); ++t) a.push_back(key(c, t));
  for (int t = 0; t < s.num_triangles(); ++t) b.push_back(key(s, t));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("cylinder vertices lie on the circle") {
  const Mesh m = generate_channel(2.2, 0.41, 44, 8, Hole{{0.2, 0.2}, 0.05});
  int n = 0;
  for (const auto& e : m.boundary_edges()) {
    if (e.tag != tags::kCylinder) continue;
    for (int v : e.vertices) {
      const Point& p = m.vertices()[v];
      CHECK(std::hypot(p[0] - 0.2, p[1] - 0.2) == doctest::Approx(0.05).epsilon(1e-12));
      ++n;
    }
  }
  CHECK(n > 0);
  const auto tagset = m.boundary_tags();
  CHECK(tagset == std::set<BoundaryTag>{tags::kInlet, tags::kOutlet, tags::kWalls, tags::kCylinder});
}

TEST_CASE("hole crossing the boundary is rejected") {
  CHECK_THROWS_AS(generate_channel(2.2, 0.41, 44, 8, Hole{{0.2, 0.2}, 0.3}), MeshError);
}

TEST_CASE("contraction channel carries both outlets") {
  const Mesh m = generate_contraction_channel(0.125);
  const auto t = m.boundary_tags();
  CHECK(t.count(tags::kInlet));
  CHECK(t.count(tags::kOutlet));
  CHECK(t.count(tags::kTopOutlet));
  CHECK(t.count(tags::kWalls));
}

TEST_CASE("gmsh import matches a reference reader") {
  const std::string path = test::data_path("square.msh");
  const RefMesh ref = reference_read(path);
  const Mesh m = read_mesh_file(path);
  CHECK(m.num_vertices() == static_cast<int>(ref.nodes.size()));
  CHECK(m.num_triangles() == static_cast<int>(ref.triangles.size()));
  CHECK(m.boundary_edges().size() == ref.lines.size());
  std::multiset<std::pair<double, double>> a, b;
  for (const auto& [id, p] : ref.nodes) a.insert({p[0], p[1]});
  for (const Point& p : m.vertices()) b.insert({p[0], p[1]});
  CHECK(a == b);
  std::multiset<int> ta, tb;
  for (const auto& l : ref.lines) ta.insert(l.first);
  for (const auto& e : m.boundary_edges()) tb.insert(e.tag);
  CHECK(ta == tb);
  CHECK(mesh_metrics(m).diam == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("gmsh import errors are distinct") {
  CHECK(import_error_kind("bad_node.msh") == MeshError::Kind::kConnectivity);
  CHECK(import_error_kind("missing_elements.msh") == MeshError::Kind::kMissingSection);
  CHECK(import_error_kind("zero_area.msh") == MeshError::Kind::kZeroArea);
  CHECK(import_error_kind("version4.msh") == MeshError::Kind::kUnsupportedVersion);
  CHECK_THROWS_AS(read_mesh_file(test::data_path("garbage.txt")), MeshError);
  CHECK_THROWS_AS(read_mesh_file(test::data_path("does_not_exist.msh")), MeshError);
}

TEST_CASE("duplicate coordinates are data, not keys") {
  const Mesh m = read_mesh_file(test::data_path("duplicate_coords.msh"));
  CHECK(m.num_vertices() == 5);
  CHECK(m.num_triangles() == 2);
}

TEST_CASE("round trips reproduce connectivity") {
  const Mesh m = generate_channel(2.2, 0.41, 22, 4, Hole{{0.2, 0.2}, 0.05});
  for (const Mesh& r : {import_mesh_text(export_mesh(m)), import_gmsh(export_gmsh(m))}) {
    REQUIRE(r.num_vertices() == m.num_vertices());
    CHECK(r.triangles() == m.triangles());
    CHECK(r.edges() == m.edges());
    REQUIRE(r.boundary_edges().size() == m.boundary_edges().size());
    for (std::size_t i = 0; i < m.boundary_edges().size(); ++i) {
      CHECK(r.boundary_edges()[i].vertices == m.boundary_edges()[i].vertices);
      CHECK(r.boundary_edges()[i].tag == m.boundary_edges()[i].tag);
    }
    for (int v = 0; v < m.num_vertices(); ++v) {
      CHECK(r.vertices()[v][0] == m.vertices()[v][0]);
      CHECK(r.vertices()[v][1] == m.vertices()[v][1]);
    }
  }
}

TEST_CASE("boundary partition validation") {
  const Mesh m = generate_unit_square(2);
  BoundaryPartition p;
  p.dirichlet = {1, 2, 3};
  p.open = {4};
  CHECK_NOTHROW(p.validate(m));
  p.open = {3, 4};
  CHECK_THROWS_AS(p.validate(m), MeshError);  // overlap
  p.dirichlet = {1, 2};
  p.open = {3};
  CHECK_THROWS_AS(p.validate(m), MeshError);  // tag 4 unassigned
}

TEST_CASE("outward normals have unit length and point outwards") {
  const Mesh m = generate_channel(2.2, 0.41, 22, 4, Hole{{0.2, 0.2}, 0.05});
  for (int i = 0; i < static_cast<int>(m.boundary_edges().size()); ++i) {
    const Point n = m.outward_normal(i);
    CHECK(std::hypot(n[0], n[1]) == doctest::Approx(1.0).epsilon(1e-12));
    const auto& e = m.boundary_edges()[i];
    const auto& t = m.triangles()[e.triangle];
    Point c{0, 0}, mid{0, 0};
    for (int k : t) {
      c[0] += m.vertices()[k][0] / 3;
      c[1] += m.vertices()[k][1] / 3;
    }
    for (int k : e.vertices) {
      mid[0] += m.vertices()[k][0] / 2;
      mid[1] += m.vertices()[k][1] / 2;
    }
    CHECK((mid[0] - c[0]) * n[0] + (mid[1] - c[1]) * n[1] > 0.0);
  }
}
