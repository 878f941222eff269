#ifndef ENSFLOW_EXPERIMENTS_HPP
#define ENSFLOW_EXPERIMENTS_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "ensflow/ensemble.hpp"

namespace ensflow {

/// Manufactured solution family on the unit square:
/// u = (x^2 - y sin t, -2xy + x cos t), p = (x + y - 1) sin t, scaled per
/// member by s_j = 1 + a_j (velocity, pressure and viscosity alike).
///
/// Members are 0-based. With k = j + 1: a_j = k eps for k <= J/2, and
/// a_j = -(k - J/2) eps otherwise.
struct MMSFamily {
  int J = 2;
  double nu = 1.0;
  double epsilon = 0.1;

  double offset(int j) const;
  double scale(int j) const { return 1.0 + offset(j); }
  double viscosity(int j) const { return scale(j) * nu; }
  std::vector<double> viscosities() const;
};

struct MMSFields {
  VectorField u;
  ScalarField p;
};

MMSFields mms_exact(const MMSFamily& family, int j);
/// f_j = d_t u_j + u_j . grad u_j - nu_j lap u_j + grad p_j
VectorField mms_forcing(const MMSFamily& family, int j);

struct ConvergenceOptions {
  Algorithm algorithm = Algorithm::kA4;
  double gamma = 1.5;
  MMSFamily family;
  std::vector<int> mesh_n{10};  // one entry (fixed mesh) or one per dt
  std::vector<double> dts;
  double T = 1.0;
  bool exact_startup = true;
  bool halving = true;
  int threads = 1;
};

struct ConvergenceRow {
  double dt = 0.0;
  int n = 0;
  std::vector<double> u_error;
  std::vector<double> p_error;
  std::vector<double> u_rate;  // NaN on the first row
  std::vector<double> p_rate;
  std::size_t halvings = 0;
  std::size_t steps = 0;
};

std::vector<ConvergenceRow> convergence_study(const ConvergenceOptions& options);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);
/// Human-readable table in the layout of the convergence CSV.
void print_convergence_table(std::ostream& os, const std::vector<ConvergenceRow>& rows);

/// A boundary-value setup ready for EnsembleSolver.
struct Problem {
  std::shared_ptr<const Mesh> mesh;
  BoundaryPartition partition;
  EnsembleData data;
  std::vector<VectorField> initial;
  double inlet_diameter = 1.0;
  double max_inlet_speed = 1.0;
  /// Body forces for a Stokes solve giving the initial fields (empty: use
  /// `initial` directly).
  std::vector<VectorField> stokes_forcing;
};

struct CylinderOptions {
  int n_x = 44;
  int n_y = 8;
  int J = 3;
  bool open_outflow = true;
};

Mesh cylinder_mesh(int n_x, int n_y);
/// Inflow profile on x = 0 (and on x = 2.2 when `dirichlet_outlet`), zero elsewhere.
VectorField cylinder_inflow(bool dirichlet_outlet);

/// Channel 2.2 x 0.41 with a cylinder of radius 0.05 at (0.2, 0.2) and the
/// inflow u1 = 6/0.41^2 sin(pi t/8) y (0.41 - y). The Dirichlet variant
/// prescribes the same profile on the outlet.
Problem cylinder_problem(const CylinderOptions& options);

inline constexpr double kCylinderDrag = 2.90226;
inline constexpr double kCylinderLift = 0.477011;
inline constexpr double kCylinderPressureDrop = -0.112623;

/// Viscosities 1/1000, 1/900, 1/800, 1/700, 1/1100, 1/1200, 1/1300 (first J).
std::vector<double> cylinder_viscosities(int J);

struct ContractionOptions {
  double h = 0.125;
  int J = 3;
  double epsilon = 0.01;
};

std::vector<VectorField> contraction_inflow(int J, double epsilon);
std::vector<VectorField> contraction_stokes_forcing(int J, double epsilon);

/// Channel with a contraction and two open outlets. Inflow g_j = s_j (4y(1-y), 0)
/// with s = 1, 1 + eps, 1 - eps, 1 + 2 eps, ...; initial fields from Stokes
/// solves with perturbed body forces.
Problem contraction_problem(const ContractionOptions& options);

/// Member-wise Stokes solutions nu_j K u - B^T p = f_j with the Dirichlet data
/// at time t.
std::vector<Vector> stokes_solutions(std::shared_ptr<const TaylorHoodSpace> space,
                                     const std::vector<double>& nu,
                                     const std::vector<VectorField>& forcing,
                                     const std::vector<VectorField>& dirichlet, double t);

/// Divergence-free field curl(psi) on the box [lower, upper], vanishing with
/// its first derivatives on the box boundary:
///   psi = (q(x) q(y))^2 sum_k a_k sin(alpha_k x + phi_k) sin(beta_k y + chi_k)
/// with q the box bubble and random coefficients drawn from `seed`.
VectorField random_stream_field(std::uint64_t seed, Point lower, Point upper,
                                double amplitude = 1.0, int modes = 3);

struct Forces {
  double drag = 0.0;
  double lift = 0.0;
  double pressure_drop = 0.0;
};

struct ForceOptions {
  BoundaryTag surface = tags::kCylinder;
  Point front{0.15, 0.2};
  Point back{0.25, 0.2};
  double scale = 20.0;  // 2 / (rho U_mean^2 D) with rho = 1, U_mean = 1, D = 0.1
};

/// Forces on `surface` from the volume residual
///   -scale [(u_t, v) + nu (grad u, grad v) + (u.grad u, v) - (p, div v)]
/// with v = e_x or e_y on the surface nodes and 0 at all other nodes.
Forces drag_lift_dp(std::shared_ptr<const TaylorHoodSpace> space, const Vector& u, const Vector& u_t,
                    const Vector& p, double nu, const ForceOptions& options = {});

/// Same forces by direct quadrature of the surface traction.
Forces drag_lift_boundary(std::shared_ptr<const TaylorHoodSpace> space, const Vector& u, const Vector& p,
                          double nu, const ForceOptions& options = {});

}  // namespace ensflow

#endif  // ENSFLOW_EXPERIMENTS_HPP
