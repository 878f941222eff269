#ifndef ENSFLOW_QUADRATURE_HPP
#define ENSFLOW_QUADRATURE_HPP

#include <array>
#include <vector>

namespace ensflow {

/// Quadrature on the reference triangle in barycentric coordinates.
/// Weights sum to one; multiply by the element area.
struct TriangleRule {
  std::vector<std::array<double, 3>> barycentric;
  std::vector<double> weights;
  int degree = 0;
};

/// Gauss rule on [0,1]; weights sum to one.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
};

/// 6-point rule, exact for degree 4 (P2 x P2 products).
const TriangleRule& triangle_rule_deg4();
/// 7-point rule, exact for degree 5 (P2 advecting P2 against P2).
const TriangleRule& triangle_rule_deg5();

const LineRule& gauss3();  // degree 5
const LineRule& gauss4();  // degree 7

}  // namespace ensflow

#endif  // ENSFLOW_QUADRATURE_HPP
