#ifndef ENSFLOW_FESPACE_HPP
#define ENSFLOW_FESPACE_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ensflow/mesh.hpp"

namespace ensflow {

using Vector = Eigen::VectorXd;

using VectorField = std::function<Point(double x, double y, double t)>;
using ScalarField = std::function<double(double x, double y, double t)>;

/// Smoothed Heaviside parameters: Theta0(s) = (1 - tanh(s / (epsilon U0))) / 2.
struct ThetaParams {
  double epsilon = 0.01;
  double U0 = 1.0;

  void validate() const;
};

struct ThetaValues {
  double theta0;
  double theta1;
};

ThetaValues theta(double s, const ThetaParams& params);

/// Affine geometry of one triangle: area and barycentric gradients.
struct ElementGeometry {
  std::array<Point, 3> vertices;
  double area = 0.0;
  std::array<Point, 3> grad_lambda;

  static ElementGeometry of(const Mesh& mesh, int t);
  Point map(const std::array<double, 3>& bary) const;
};

/// Values and gradients of the six P2 basis functions at a barycentric point.
/// Local order: vertices 0,1,2, then edges (0,1), (1,2), (2,0).
struct P2Basis {
  std::array<double, 6> value;
  std::array<Point, 6> grad;

  static P2Basis at(const ElementGeometry& g, const std::array<double, 3>& bary);
};

/// One-dimensional P2 basis on a boundary edge: (start, end, midpoint).
std::array<double, 3> p2_edge_basis(double s);

/// Taylor-Hood P2/P1 dof layout.
///
/// Scalar P2 nodes are numbered vertices first, then edges. Velocity
/// coefficients are stored component-blocked: [u_x (n2) | u_y (n2)].
class TaylorHoodSpace {
 public:
  TaylorHoodSpace(std::shared_ptr<const Mesh> mesh, BoundaryPartition partition);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const BoundaryPartition& partition() const { return partition_; }

  int num_p2() const { return n_p2_; }
  int num_velocity() const { return 2 * n_p2_; }
  int num_pressure() const { return mesh_->num_vertices(); }

  std::array<int, 6> element_dofs(int t) const;
  /// Scalar P2 nodes of a boundary edge: (start, end, midpoint).
  std::array<int, 3> boundary_edge_dofs(int boundary_edge) const;
  const Point& node(int p2_dof) const { return nodes_[p2_dof]; }

  /// Scalar P2 nodes on Gamma_D, sorted.
  const std::vector<int>& dirichlet_nodes() const { return dirichlet_nodes_; }
  /// Velocity dofs on Gamma_D (both components), sorted.
  const std::vector<int>& constrained_velocity_dofs() const { return constrained_; }
  /// Indices into mesh().boundary_edges() for edges on Gamma_N.
  const std::vector<int>& open_edges() const { return open_edges_; }
  bool has_open_boundary() const { return !open_edges_.empty(); }

  /// Tag of each Dirichlet node (first tag seen; corner nodes are shared).
  BoundaryTag dirichlet_tag(int p2_dof) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  BoundaryPartition partition_;
  int n_p2_ = 0;
  std::vector<Point> nodes_;
  std::vector<int> dirichlet_nodes_;
  std::vector<BoundaryTag> dirichlet_tags_;
  std::vector<int> constrained_;
  std::vector<int> open_edges_;
};

enum class FieldKind { kVelocity, kPressure };

/// Coefficient vector over a Taylor-Hood space.
struct FEFunction {
  std::shared_ptr<const TaylorHoodSpace> space;
  FieldKind kind = FieldKind::kVelocity;
  Vector coeffs;

  static FEFunction zero_velocity(std::shared_ptr<const TaylorHoodSpace> space);
  static FEFunction zero_pressure(std::shared_ptr<const TaylorHoodSpace> space);

  /// Velocity value and gradient (row = component) inside element t.
  Point value(int t, const P2Basis& basis) const;
  std::array<Point, 2> gradient(int t, const P2Basis& basis) const;
  double pressure(int t, const std::array<double, 3>& bary) const;

  void require(FieldKind k) const;
};

FEFunction interpolate(std::shared_ptr<const TaylorHoodSpace> space,
                       const VectorField& field, double t);
FEFunction interpolate(std::shared_ptr<const TaylorHoodSpace> space,
                       const ScalarField& field, double t);

struct Norms {
  double L2 = 0.0;
  double H1_semi = 0.0;
  double boundary_L2 = 0.0;  // over Gamma_N
};

Norms norms(const FEFunction& f);

/// L2 distance between a discrete function and a closed form.
double l2_error(const FEFunction& f, const VectorField& exact, double t);
double l2_error(const FEFunction& f, const ScalarField& exact, double t);

/// Suprema over the discrete sample set (P2 nodes and quadrature points).
struct InfNorms {
  double value_inf = 0.0;
  double divergence_inf = 0.0;
  double boundary_normal_theta_inf = 0.0;  // max over Gamma_N of |(u.n) Theta0(u.n)|
};

InfNorms inf_norms(const FEFunction& u, const ThetaParams& theta_params);

/// Triangle containing p and the barycentric coordinates of p in it.
struct Location {
  int triangle;
  std::array<double, 3> bary;
};
std::optional<Location> locate(const Mesh& mesh, const Point& p, double tol = 1e-10);

}  // namespace ensflow

#endif  // ENSFLOW_FESPACE_HPP
