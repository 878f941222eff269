#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "ensflow/mesh.hpp"

namespace ensflow {
namespace {

using Kind = MeshError::Kind;

/// Line-oriented reader over an in-memory buffer.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : in_(std::string(text)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      line.erase(0, first);
      return true;
    }
    return false;
  }

  int line_no() const { return line_no_; }

  [[noreturn]] void fail(Kind kind, const std::string& msg) const {
    throw MeshError(kind, "line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

template <typename T>
T parse_field(std::istringstream& ss, const LineReader& r, const char* what) {
  T value{};
  if (!(ss >> value)) r.fail(Kind::kMalformed, std::string("expected ") + what);
  return value;
}

std::size_t parse_count(LineReader& r, const char* section) {
  std::string line;
  if (!r.next(line)) r.fail(Kind::kMalformed, std::string("truncated ") + section);
  std::istringstream ss(line);
  const long long n = parse_field<long long>(ss, r, "entity count");
  if (n < 0) r.fail(Kind::kMalformed, "negative count");
  return static_cast<std::size_t>(n);
}

void expect_end(LineReader& r, const std::string& end_marker) {
  std::string line;
  if (!r.next(line) || line.rfind(end_marker, 0) != 0) {
    r.fail(Kind::kMalformed, "expected " + end_marker);
  }
}

}  // namespace

Mesh import_gmsh(std::string_view text) {
  LineReader r(text);
  std::string line;
  bool have_format = false;
  bool have_nodes = false;
  bool have_elements = false;

  std::unordered_map<long long, Point> nodes;
  struct RawTri {
    std::array<long long, 3> n;
  };
  struct RawLine {
    std::array<long long, 2> n;
    BoundaryTag tag;
  };
  std::vector<RawTri> tris;
  std::vector<RawLine> lines;

  while (r.next(line)) {
    if (line.rfind("$MeshFormat", 0) == 0) {
      if (!r.next(line)) r.fail(Kind::kMalformed, "truncated $MeshFormat");
      std::istringstream ss(line);
      const std::string version = parse_field<std::string>(ss, r, "version");
      const int file_type = parse_field<int>(ss, r, "file-type");
      if (version.rfind("2.", 0) != 0) {
        r.fail(Kind::kUnsupportedVersion,
               "Gmsh format " + version + " is not supported; export as ASCII v2.2");
      }
      if (file_type != 0) r.fail(Kind::kUnsupportedVersion, "binary Gmsh files are not supported");
      expect_end(r, "$EndMeshFormat");
      have_format = true;
    } else if (line.rfind("$Nodes", 0) == 0) {
      const std::size_t n = parse_count(r, "$Nodes");
      for (std::size_t i = 0; i < n; ++i) {
        if (!r.next(line)) r.fail(Kind::kMalformed, "truncated $Nodes");
        std::istringstream ss(line);
        const auto id = parse_field<long long>(ss, r, "node id");
        const auto x = parse_field<double>(ss, r, "x");
        const auto y = parse_field<double>(ss, r, "y");
        if (!nodes.emplace(id, Point{x, y}).second) {
          r.fail(Kind::kMalformed, "duplicate node id " + std::to_string(id));
        }
      }
      expect_end(r, "$EndNodes");
      have_nodes = true;
    } else if (line.rfind("$Elements", 0) == 0) {
      const std::size_t n = parse_count(r, "$Elements");
      for (std::size_t i = 0; i < n; ++i) {
        if (!r.next(line)) r.fail(Kind::kMalformed, "truncated $Elements");
        std::istringstream ss(line);
        parse_field<long long>(ss, r, "element id");
        const int type = parse_field<int>(ss, r, "element type");
        const int ntags = parse_field<int>(ss, r, "tag count");
        std::vector<long long> element_tags(ntags);
        for (auto& t : element_tags) t = parse_field<long long>(ss, r, "tag");
        if (type == 1) {
          if (ntags < 1) r.fail(Kind::kUntaggedBoundary, "line element without tag");
          RawLine l{{}, static_cast<BoundaryTag>(element_tags[0])};
          for (auto& v : l.n) v = parse_field<long long>(ss, r, "node");
          lines.push_back(l);
        } else if (type == 2) {
          RawTri t{};
          for (auto& v : t.n) v = parse_field<long long>(ss, r, "node");
          tris.push_back(t);
        } else if (type == 15) {
          continue;  // point elements carry no mesh information here
        } else {
          r.fail(Kind::kMalformed,
                 "unsupported element type " + std::to_string(type) +
                     " (only 2-node lines and 3-node triangles)");
        }
      }
      expect_end(r, "$EndElements");
      have_elements = true;
    } else if (line[0] == '$' && line.rfind("$End", 0) != 0) {
      // Skip unknown sections such as $PhysicalNames.
      const std::string end = "$End" + line.substr(1);
      while (r.next(line) && line.rfind(end, 0) != 0) {
      }
    }
  }
  if (!have_format) throw MeshError(Kind::kMissingSection, "missing $MeshFormat section");
  if (!have_nodes) throw MeshError(Kind::kMissingSection, "missing $Nodes section");
  if (!have_elements) throw MeshError(Kind::kMissingSection, "missing $Elements section");

  // Keep referenced nodes only, numbered in ascending id order.
  std::vector<long long> used;
  for (const auto& t : tris) used.insert(used.end(), t.n.begin(), t.n.end());
  for (const auto& l : lines) used.insert(used.end(), l.n.begin(), l.n.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::unordered_map<long long, int> renumber;
  std::vector<Point> vertices;
  for (long long id : used) {
    auto n = nodes.find(id);
    if (n == nodes.end()) {
      throw MeshError(Kind::kConnectivity,
                      "element references unknown node " + std::to_string(id) + " (" +
                          std::to_string(nodes.size()) + " nodes defined)");
    }
    renumber.emplace(id, static_cast<int>(vertices.size()));
    vertices.push_back(n->second);
  }
  auto map_node = [&](long long id) { return renumber.at(id); };

  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(tris.size());
  for (const auto& t : tris) {
    std::array<int, 3> tri{map_node(t.n[0]), map_node(t.n[1]), map_node(t.n[2])};
    const Point& a = vertices[tri[0]];
    const Point& b = vertices[tri[1]];
    const Point& c = vertices[tri[2]];
    const double area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    const double scale = std::max({std::abs(b[0] - a[0]), std::abs(b[1] - a[1]),
                                   std::abs(c[0] - a[0]), std::abs(c[1] - a[1])});
    if (std::abs(area2) <= 1e-14 * scale * scale) {
      throw MeshError(Kind::kZeroArea, "triangle with zero area");
    }
    if (area2 < 0.0) std::swap(tri[1], tri[2]);
    triangles.push_back(tri);
  }
  std::vector<BoundaryEdge> boundary;
  boundary.reserve(lines.size());
  for (const auto& l : lines) {
    boundary.push_back({{map_node(l.n[0]), map_node(l.n[1])}, l.tag});
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

std::string export_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "ensflow-mesh 1\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& p : mesh.vertices()) out << p[0] << ' ' << p[1] << "\n";
  out << "triangles " << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
  out << "boundary " << mesh.boundary_edges().size() << "\n";
  for (const auto& be : mesh.boundary_edges()) {
    out << be.vertices[0] << ' ' << be.vertices[1] << ' ' << be.tag << "\n";
  }
  return out.str();
}

Mesh import_mesh_text(std::string_view text) {
  LineReader r(text);
  std::string line;
  auto header = [&](const char* name) {
    if (!r.next(line)) r.fail(Kind::kMissingSection, std::string("missing ") + name);
    std::istringstream ss(line);
    if (parse_field<std::string>(ss, r, name) != name) {
      r.fail(Kind::kMissingSection, std::string("expected ") + name);
    }
    return parse_field<std::size_t>(ss, r, "count");
  };
  if (!r.next(line) || line.rfind("ensflow-mesh", 0) != 0) {
    r.fail(Kind::kMissingSection, "not an ensflow-mesh file");
  }
  std::vector<Point> vertices(header("vertices"));
  for (auto& p : vertices) {
    if (!r.next(line)) r.fail(Kind::kMalformed, "truncated vertices");
    std::istringstream ss(line);
    p = {parse_field<double>(ss, r, "x"), parse_field<double>(ss, r, "y")};
  }
  std::vector<std::array<int, 3>> triangles(header("triangles"));
  for (auto& t : triangles) {
    if (!r.next(line)) r.fail(Kind::kMalformed, "truncated triangles");
    std::istringstream ss(line);
    for (auto& v : t) v = parse_field<int>(ss, r, "vertex index");
  }
  std::vector<BoundaryEdge> boundary(header("boundary"));
  for (auto& be : boundary) {
    if (!r.next(line)) r.fail(Kind::kMalformed, "truncated boundary");
    std::istringstream ss(line);
    be.vertices = {parse_field<int>(ss, r, "vertex index"),
                   parse_field<int>(ss, r, "vertex index")};
    be.tag = parse_field<int>(ss, r, "tag");
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

std::string export_gmsh(const Mesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.num_vertices() << "\n";
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    out << i + 1 << ' ' << mesh.vertices()[i][0] << ' ' << mesh.vertices()[i][1] << " 0\n";
  }
  out << "$EndNodes\n";
  const auto nb = mesh.boundary_edges().size();
  out << "$Elements\n" << nb + mesh.triangles().size() << "\n";
  int id = 1;
  for (const auto& be : mesh.boundary_edges()) {
    out << id++ << " 1 2 " << be.tag << ' ' << be.tag << ' ' << be.vertices[0] + 1 << ' '
        << be.vertices[1] + 1 << "\n";
  }
  for (const auto& t : mesh.triangles()) {
    out << id++ << " 2 2 1 1 " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
  }
  out << "$EndElements\n";
  return out.str();
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError(Kind::kInvalidArgument, "cannot open mesh file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text.compare(first, 11, "$MeshFormat") == 0) {
    return import_gmsh(text);
  }
  return import_mesh_text(text);
}

}  // namespace ensflow
