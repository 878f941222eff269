#ifndef ENSFLOW_VTK_HPP
#define ENSFLOW_VTK_HPP

#include <ostream>
#include <string>

#include "ensflow/fespace.hpp"

namespace ensflow {

/// Legacy ASCII VTK unstructured grid.
///
/// With `subdivide_p2` every triangle is split into four using the edge
/// midpoints so that all P2 nodal values are written; otherwise only the
/// vertex values are. Pressure (P1) is interpolated linearly to midpoints.
void write_vtk(std::ostream& out, const FEFunction& velocity, const FEFunction* pressure,
               bool subdivide_p2 = false, const std::string& title = "ensflow");

}  // namespace ensflow

#endif  // ENSFLOW_VTK_HPP
