#include "ensflow/vtk.hpp"

#include <iomanip>

namespace ensflow {

void write_vtk(std::ostream& out, const FEFunction& velocity, const FEFunction* pressure,
               bool subdivide_p2, const std::string& title) {
  velocity.require(FieldKind::kVelocity);
  if (pressure) pressure->require(FieldKind::kPressure);
  const auto& space = *velocity.space;
  const Mesh& mesh = space.mesh();
  const int nv = mesh.num_vertices();
  const int np = subdivide_p2 ? space.num_p2() : nv;
  const int n2 = space.num_p2();

  out << std::setprecision(12);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (int i = 0; i < np; ++i) out << space.node(i)[0] << ' ' << space.node(i)[1] << " 0\n";

  const int ncell = subdivide_p2 ? 4 * mesh.num_triangles() : mesh.num_triangles();
  out << "CELLS " << ncell << ' ' << 4 * ncell << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto d = space.element_dofs(t);
    if (!subdivide_p2) {
      out << "3 " << d[0] << ' ' << d[1] << ' ' << d[2] << "\n";
      continue;
    }
    // Edge nodes: d[3]=(0,1), d[4]=(1,2), d[5]=(2,0).
    out << "3 " << d[0] << ' ' << d[3] << ' ' << d[5] << "\n";
    out << "3 " << d[3] << ' ' << d[1] << ' ' << d[4] << "\n";
    out << "3 " << d[5] << ' ' << d[4] << ' ' << d[2] << "\n";
    out << "3 " << d[3] << ' ' << d[4] << ' ' << d[5] << "\n";
  }
  out << "CELL_TYPES " << ncell << "\n";
  for (int c = 0; c < ncell; ++c) out << "5\n";

  out << "POINT_DATA " << np << "\n";
  out << "VECTORS velocity double\n";
  for (int i = 0; i < np; ++i) {
    out << velocity.coeffs[i] << ' ' << velocity.coeffs[i + n2] << " 0\n";
  }
  if (pressure) {
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < np; ++i) {
      if (i < nv) {
        out << pressure->coeffs[i] << "\n";
      } else {
        const auto& e = mesh.edges()[i - nv];
        out << 0.5 * (pressure->coeffs[e[0]] + pressure->coeffs[e[1]]) << "\n";
      }
    }
  }
}

}  // namespace ensflow
