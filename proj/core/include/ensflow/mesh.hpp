#ifndef ENSFLOW_MESH_HPP
#define ENSFLOW_MESH_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ensflow {

using Point = std::array<double, 2>;
using BoundaryTag = int;

/// Boundary tags produced by the structured generators.
namespace tags {
inline constexpr BoundaryTag kBottom = 1;
inline constexpr BoundaryTag kRight = 2;
inline constexpr BoundaryTag kTop = 3;
inline constexpr BoundaryTag kLeft = 4;

inline constexpr BoundaryTag kInlet = 1;
inline constexpr BoundaryTag kOutlet = 2;
inline constexpr BoundaryTag kWalls = 3;
inline constexpr BoundaryTag kCylinder = 4;
inline constexpr BoundaryTag kTopOutlet = 5;
}  // namespace tags

class MeshError : public std::runtime_error {
 public:
  enum class Kind {
    kInvalidArgument,
    kMissingSection,
    kUnsupportedVersion,
    kMalformed,
    kConnectivity,
    kZeroArea,
    kUntaggedBoundary,
  };

  MeshError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct BoundaryEdge {
  std::array<int, 2> vertices;
  BoundaryTag tag = 0;
  int edge = -1;      // index into Mesh::edges()
  int triangle = -1;  // owning triangle
};

/// Conforming triangulation with tagged boundary edges.
///
/// Triangles are stored counter-clockwise. The edge table lists every
/// undirected edge once; `triangle_edges(t)[k]` is the edge joining local
/// vertices k and (k+1)%3, which is the ordering used by the P2 dof map.
/// Immutable after construction.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<BoundaryEdge> boundary);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  const std::array<int, 3>& triangle_edges(int t) const { return tri_edges_[t]; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  double signed_area(int t) const;
  /// Outward unit normal of a boundary edge.
  Point outward_normal(int boundary_edge) const;
  double boundary_edge_length(int boundary_edge) const;

  std::set<BoundaryTag> boundary_tags() const;

 private:
  void build_edges();

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
};

/// Splits boundary tags into Dirichlet (Gamma_D) and open (Gamma_N) roles.
struct BoundaryPartition {
  std::set<BoundaryTag> dirichlet;
  std::set<BoundaryTag> open;

  bool is_dirichlet(BoundaryTag t) const { return dirichlet.count(t) != 0; }
  bool is_open(BoundaryTag t) const { return open.count(t) != 0; }

  /// Throws MeshError if the sets overlap or leave a mesh tag unassigned.
  void validate(const Mesh& mesh) const;

  static BoundaryPartition all_dirichlet(const Mesh& mesh);
};

struct Hole {
  Point center;
  double radius = 0.0;
};

struct MeshMetrics {
  double h = 0.0;     // longest triangle edge
  double diam = 0.0;  // largest vertex-to-vertex distance
  double area = 0.0;
  std::vector<double> areas;
};

Mesh generate_unit_square(int n);

/// Rectangle [0,length]x[0,height] with tags inlet (x=0), outlet (x=length),
/// walls (y=0, y=height) and, when a hole is given, cylinder.
///
/// Without a hole the quads of an n_x by n_y grid are split along the
/// lower-left/upper-right diagonal. With a hole, the cylinder sits inside
/// an O-grid block embedded in a piecewise-uniform tensor grid.
Mesh generate_channel(double length, double height, int n_x, int n_y,
                      std::optional<Hole> hole = std::nullopt);

/// Channel with a contraction and two outlets (one on top, one at the end).
Mesh generate_contraction_channel(double h_target);

/// Parses Gmsh ASCII v2.2. Line elements carry boundary tags (first tag),
/// triangles carry region tags (ignored). Unreferenced nodes are dropped.
Mesh import_gmsh(std::string_view text);

/// Plain-text export used for round trips and the `mesh-info` command.
std::string export_mesh(const Mesh& mesh);
Mesh import_mesh_text(std::string_view text);

/// Writes the mesh as Gmsh ASCII v2.2.
std::string export_gmsh(const Mesh& mesh);

/// Dispatches on content: Gmsh files start with `$MeshFormat`.
Mesh read_mesh_file(const std::string& path);

MeshMetrics mesh_metrics(const Mesh& mesh);

}  // namespace ensflow

#endif  // ENSFLOW_MESH_HPP
