#include "ensflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

namespace ensflow {
namespace {

double cross(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

double dist(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

std::pair<int, int> key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryEdge> boundary)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)) {
  const int nv = num_vertices();
  if (triangles_.empty()) {
    throw MeshError(MeshError::Kind::kConnectivity, "mesh has no triangles");
  }
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles_[t]) {
      if (v < 0 || v >= nv) {
        throw MeshError(MeshError::Kind::kConnectivity,
                        "triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(v) + " of " + std::to_string(nv));
      }
    }
    const double a = signed_area(t);
    if (!(a > 0.0)) {
      throw MeshError(a == 0.0 ? MeshError::Kind::kZeroArea
                               : MeshError::Kind::kConnectivity,
                      "triangle " + std::to_string(t) +
                          (a == 0.0 ? " has zero area" : " is clockwise"));
    }
  }
  build_edges();
}

double Mesh::signed_area(int t) const {
  const auto& tri = triangles_[t];
  return 0.5 * cross(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

void Mesh::build_edges() {
  std::map<std::pair<int, int>, int> index;
  std::map<std::pair<int, int>, int> directed;
  std::vector<int> count;
  std::vector<int> owner;
  tri_edges_.resize(triangles_.size());
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      if (a == b) {
        throw MeshError(MeshError::Kind::kZeroArea,
                        "triangle " + std::to_string(t) + " repeats a vertex");
      }
      if (!directed.emplace(std::pair{a, b}, t).second) {
        throw MeshError(MeshError::Kind::kConnectivity,
                        "edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") used twice with the same orientation");
      }
      auto [it, inserted] = index.emplace(key(a, b), num_edges());
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        count.push_back(0);
        owner.push_back(t);
      }
      ++count[it->second];
      if (count[it->second] > 2) {
        throw MeshError(MeshError::Kind::kConnectivity,
                        "edge shared by more than two triangles");
      }
      tri_edges_[t][k] = it->second;
    }
  }

  std::vector<int> tagged(edges_.size(), 0);
  for (auto& be : boundary_) {
    auto it = index.find(key(be.vertices[0], be.vertices[1]));
    if (it == index.end() || count[it->second] != 1) {
      throw MeshError(MeshError::Kind::kConnectivity,
                      "boundary segment (" + std::to_string(be.vertices[0]) + "," +
                          std::to_string(be.vertices[1]) +
                          ") is not a boundary edge of the triangulation");
    }
    if (tagged[it->second]++) {
      throw MeshError(MeshError::Kind::kConnectivity,
                      "boundary edge tagged more than once");
    }
    be.edge = it->second;
    be.triangle = owner[it->second];
    // Orient with the domain on the left (matching the owner triangle).
    if (!directed.count({be.vertices[0], be.vertices[1]})) {
      std::swap(be.vertices[0], be.vertices[1]);
    }
  }
  for (int e = 0; e < num_edges(); ++e) {
    if (count[e] == 1 && !tagged[e]) {
      throw MeshError(MeshError::Kind::kUntaggedBoundary,
                      "boundary edge (" + std::to_string(edges_[e][0]) + "," +
                          std::to_string(edges_[e][1]) + ") carries no tag");
    }
  }
}

Point Mesh::outward_normal(int i) const {
  const auto& be = boundary_[i];
  const Point& a = vertices_[be.vertices[0]];
  const Point& b = vertices_[be.vertices[1]];
  const double len = dist(a, b);
  // Domain lies to the left of a->b, so the outward normal is the right turn.
  return {(b[1] - a[1]) / len, -(b[0] - a[0]) / len};
}

double Mesh::boundary_edge_length(int i) const {
  const auto& be = boundary_[i];
  return dist(vertices_[be.vertices[0]], vertices_[be.vertices[1]]);
}

std::set<BoundaryTag> Mesh::boundary_tags() const {
  std::set<BoundaryTag> out;
  for (const auto& be : boundary_) out.insert(be.tag);
  return out;
}

void BoundaryPartition::validate(const Mesh& mesh) const {
  for (BoundaryTag t : dirichlet) {
    if (open.count(t)) {
      throw MeshError(MeshError::Kind::kInvalidArgument,
                      "tag " + std::to_string(t) + " is both Dirichlet and open");
    }
  }
  for (BoundaryTag t : mesh.boundary_tags()) {
    if (!dirichlet.count(t) && !open.count(t)) {
      throw MeshError(MeshError::Kind::kInvalidArgument,
                      "boundary tag " + std::to_string(t) + " has no role");
    }
  }
}

BoundaryPartition BoundaryPartition::all_dirichlet(const Mesh& mesh) {
  BoundaryPartition p;
  p.dirichlet = mesh.boundary_tags();
  return p;
}

MeshMetrics mesh_metrics(const Mesh& mesh) {
  MeshMetrics m;
  const auto& v = mesh.vertices();
  m.areas.reserve(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    for (int k = 0; k < 3; ++k) {
      m.h = std::max(m.h, dist(v[tri[k]], v[tri[(k + 1) % 3]]));
    }
    m.areas.push_back(mesh.signed_area(t));
    m.area += m.areas.back();
  }
  // The diameter is attained between boundary vertices.
  std::vector<int> bv;
  for (const auto& be : mesh.boundary_edges()) bv.push_back(be.vertices[0]);
  std::sort(bv.begin(), bv.end());
  bv.erase(std::unique(bv.begin(), bv.end()), bv.end());
  for (std::size_t i = 0; i < bv.size(); ++i) {
    for (std::size_t j = i + 1; j < bv.size(); ++j) {
      m.diam = std::max(m.diam, dist(v[bv[i]], v[bv[j]]));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Structured generators

namespace {

/// Collects triangles, merges vertices by integer key and tags the boundary
/// with a classifier evaluated at edge midpoints.
class MeshBuilder {
 public:
  int vertex(std::int64_t id, const Point& p) {
    auto [it, inserted] = ids_.emplace(id, static_cast<int>(vertices_.size()));
    if (inserted) vertices_.push_back(p);
    return it->second;
  }

  void triangle(int a, int b, int c) {
    if (cross(vertices_[a], vertices_[b], vertices_[c]) < 0.0) std::swap(b, c);
    triangles_.push_back({a, b, c});
  }

  /// Splits a quad a-b-c-d (counter-clockwise) along the a-c diagonal.
  void quad(int a, int b, int c, int d) {
    triangle(a, b, c);
    triangle(a, c, d);
  }

  Mesh build(const std::function<BoundaryTag(const Point&)>& classify) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : triangles_) {
      for (int k = 0; k < 3; ++k) ++count[key(t[k], t[(k + 1) % 3])];
    }
    std::vector<BoundaryEdge> boundary;
    for (const auto& t : triangles_) {
      for (int k = 0; k < 3; ++k) {
        const int a = t[k];
        const int b = t[(k + 1) % 3];
        if (count[key(a, b)] != 1) continue;
        const Point mid{0.5 * (vertices_[a][0] + vertices_[b][0]),
                        0.5 * (vertices_[a][1] + vertices_[b][1])};
        boundary.push_back({{a, b}, classify(mid)});
      }
    }
    return Mesh(std::move(vertices_), std::move(triangles_), std::move(boundary));
  }

 private:
  std::map<std::int64_t, int> ids_;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
};

std::vector<double> uniform_lines(double a, double b, int n) {
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = a + (b - a) * i / n;
  out[n] = b;
  return out;
}

void append_lines(std::vector<double>& lines, double a, double b, int n) {
  auto seg = uniform_lines(a, b, n);
  lines.insert(lines.end(), seg.begin() + (lines.empty() ? 0 : 1), seg.end());
}

std::int64_t grid_id(int i, int j) { return (static_cast<std::int64_t>(i) << 32) | j; }

}  // namespace

Mesh generate_unit_square(int n) {
  if (n < 1) {
    throw MeshError(MeshError::Kind::kInvalidArgument,
                    "unit square needs at least one subdivision");
  }
  MeshBuilder b;
  const auto lines = uniform_lines(0.0, 1.0, n);
  auto v = [&](int i, int j) { return b.vertex(grid_id(i, j), {lines[i], lines[j]}); };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      b.quad(v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
    }
  }
  return b.build([](const Point& p) {
    if (p[1] == 0.0) return tags::kBottom;
    if (p[0] == 1.0) return tags::kRight;
    if (p[1] == 1.0) return tags::kTop;
    return tags::kLeft;
  });
}

Mesh generate_channel(double length, double height, int n_x, int n_y,
                      std::optional<Hole> hole) {
  if (!(length > 0.0) || !(height > 0.0) || n_x < 1 || n_y < 1) {
    throw MeshError(MeshError::Kind::kInvalidArgument, "invalid channel dimensions");
  }
  auto classify = [length, height](const Point& p) {
    const double tol = 1e-12 * std::max(length, height);
    if (std::abs(p[0]) < tol) return tags::kInlet;
    if (std::abs(p[0] - length) < tol) return tags::kOutlet;
    if (std::abs(p[1]) < tol || std::abs(p[1] - height) < tol) return tags::kWalls;
    return tags::kCylinder;
  };

  MeshBuilder b;
  if (!hole) {
    const auto xs = uniform_lines(0.0, length, n_x);
    const auto ys = uniform_lines(0.0, height, n_y);
    auto v = [&](int i, int j) { return b.vertex(grid_id(i, j), {xs[i], ys[j]}); };
    for (int j = 0; j < n_y; ++j) {
      for (int i = 0; i < n_x; ++i) {
        b.quad(v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
      }
    }
    return b.build(classify);
  }

  const double cx = hole->center[0];
  const double cy = hole->center[1];
  const double r = hole->radius;
  const double clearance = std::min({cx, length - cx, cy, height - cy});
  if (!(r > 0.0) || !(r < clearance)) {
    throw MeshError(MeshError::Kind::kInvalidArgument,
                    "hole must lie strictly inside the channel");
  }
  const double h = std::min(length / n_x, height / n_y);
  const double a = std::min(2.0 * r, r + 0.5 * (clearance - r));

  const int min_segments =
      std::max(16, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / h)));
  const int m = std::max((min_segments + 3) / 4,
                         static_cast<int>(std::lround(2.0 * a / h)));
  auto count = [h](double span) {
    return std::max(1, static_cast<int>(std::lround(span / h)));
  };

  std::vector<double> xs, ys;
  append_lines(xs, 0.0, cx - a, count(cx - a));
  const int ix0 = static_cast<int>(xs.size()) - 1;
  append_lines(xs, cx - a, cx + a, m);
  append_lines(xs, cx + a, length, count(length - cx - a));
  append_lines(ys, 0.0, cy - a, count(cy - a));
  const int iy0 = static_cast<int>(ys.size()) - 1;
  append_lines(ys, cy - a, cy + a, m);
  append_lines(ys, cy + a, height, count(height - cy - a));

  auto v = [&](int i, int j) { return b.vertex(grid_id(i, j), {xs[i], ys[j]}); };
  const int nxc = static_cast<int>(xs.size()) - 1;
  const int nyc = static_cast<int>(ys.size()) - 1;
  for (int j = 0; j < nyc; ++j) {
    for (int i = 0; i < nxc; ++i) {
      if (i >= ix0 && i < ix0 + m && j >= iy0 && j < iy0 + m) continue;
      b.quad(v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
    }
  }

  // O-grid between the circle and the box perimeter.
  std::vector<std::pair<int, int>> perimeter;  // grid indices, counter-clockwise
  for (int k = 0; k < m; ++k) perimeter.emplace_back(ix0 + k, iy0);
  for (int k = 0; k < m; ++k) perimeter.emplace_back(ix0 + m, iy0 + k);
  for (int k = 0; k < m; ++k) perimeter.emplace_back(ix0 + m - k, iy0 + m);
  for (int k = 0; k < m; ++k) perimeter.emplace_back(ix0, iy0 + m - k);
  const int np = static_cast<int>(perimeter.size());
  const double ring_spacing = 2.0 * std::numbers::pi * r / np;
  const int layers =
      std::max(2, static_cast<int>(std::lround((a - r) / std::max(ring_spacing, 1e-300))));
  const int layers_used = std::min(layers, std::max(2, 2 * m));

  const std::int64_t ring_base = std::int64_t{1} << 62;
  auto ring = [&](int k, int l) {
    k %= np;
    const auto [gi, gj] = perimeter[k];
    if (l == layers_used) return v(gi, gj);
    const Point outer{xs[gi], ys[gj]};
    const double ang = std::atan2(outer[1] - cy, outer[0] - cx);
    const Point inner{cx + r * std::cos(ang), cy + r * std::sin(ang)};
    const double s = static_cast<double>(l) / layers_used;
    const Point p = l == 0 ? inner
                           : Point{inner[0] + s * (outer[0] - inner[0]),
                                   inner[1] + s * (outer[1] - inner[1])};
    return b.vertex(ring_base + static_cast<std::int64_t>(k) * (layers_used + 1) + l, p);
  };
  for (int k = 0; k < np; ++k) {
    for (int l = 0; l < layers_used; ++l) {
      b.quad(ring(k, l), ring(k + 1, l), ring(k + 1, l + 1), ring(k, l + 1));
    }
  }
  return b.build(classify);
}

Mesh generate_contraction_channel(double h_target) {
  if (!(h_target > 0.0)) {
    throw MeshError(MeshError::Kind::kInvalidArgument, "h_target must be positive");
  }
  // Main channel [0,6]x[0,1]; throat x in [2,3] narrowed to y in [0.25,0.75];
  // top branch x in [4,4.5] rising to y=2. All breakpoints are multiples of 1/4.
  const int k = std::max(1, static_cast<int>(std::ceil(0.25 / h_target)));
  const double s = 0.25 / k;
  const int nx = 24 * k;
  const int ny = 8 * k;
  auto keep = [&](int i, int j) {
    const double x = (i + 0.5) * s;
    const double y = (j + 0.5) * s;
    if (y < 1.0) return !(x > 2.0 && x < 3.0 && (y < 0.25 || y > 0.75));
    return x > 4.0 && x < 4.5;
  };
  MeshBuilder b;
  auto v = [&](int i, int j) { return b.vertex(grid_id(i, j), {i * s, j * s}); };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (keep(i, j)) b.quad(v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
    }
  }
  return b.build([](const Point& p) {
    constexpr double tol = 1e-12;
    if (std::abs(p[0]) < tol) return tags::kInlet;
    if (std::abs(p[0] - 6.0) < tol) return tags::kOutlet;
    if (std::abs(p[1] - 2.0) < tol) return tags::kTopOutlet;
    return tags::kWalls;
  });
}

}  // namespace ensflow
