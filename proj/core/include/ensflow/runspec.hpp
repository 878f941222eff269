#ifndef ENSFLOW_RUNSPEC_HPP
#define ENSFLOW_RUNSPEC_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ensflow/ensemble.hpp"

namespace ensflow {

/// Parse or validation failure. `field` is the dotted path of the offending
/// entry (empty for syntax errors, which carry line and column instead).
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string field, const std::string& message, int line = 0, int column = 0);

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

struct MeshSpec {
  /// unit_square, channel, cylinder or contraction; empty when `file` is set.
  std::string generator;
  std::string file;
  int n = 10;  // unit_square
  double length = 2.2;
  double height = 0.41;
  int n_x = 44;
  int n_y = 8;
  std::optional<Hole> hole;
  double h = 0.125;  // contraction
};

/// Initial and boundary data. `name` is one of
///   zero         zero initial fields, zero Dirichlet data
///   random       seeded divergence-free initial fields, zero Dirichlet data
///   mms          manufactured solution family on the unit square
///   cylinder     flow past a cylinder (inflow profile, zero initial fields)
///   contraction  contraction channel (Stokes initial fields)
struct ProblemSpec {
  std::string name = "zero";
  double epsilon = 0.1;     // mms / contraction perturbation size
  double nu = 1.0;          // mms base viscosity
  double amplitude = 1.0;   // random
  int modes = 3;            // random
  bool exact_startup = true;  // mms: closed-form u^{-1} for BDF2
};

struct OutputSpec {
  bool csv = true;
  int vtk_every = 0;  // 0: no snapshots
  bool vtk_subdivide = true;
  std::vector<std::string> fields{"velocity", "pressure"};
  bool forces = false;
};

struct ConvergenceSpec {
  std::vector<double> dts;
  std::vector<int> n;
};

struct RunSpec {
  MeshSpec mesh;
  /// Empty sets mean: the problem's default roles, or all Dirichlet.
  BoundaryPartition boundary;
  bool boundary_given = false;
  ProblemSpec problem;

  int J = 1;
  std::vector<double> nu;  // empty: problem default
  bool gamma_auto = false;
  double gamma = 0.0;
  double L = 0.0;
  std::optional<double> L_tau = 0.01;  // "auto:tau" -> tau * inlet diameter
  ThetaParams theta;
  bool theta_U0_auto = true;  // U0 = max inlet speed
  double C = 1.0;
  std::optional<double> lambda1;
  bool require_guarantee = false;

  Algorithm algorithm = Algorithm::kA1;
  double dt0 = 0.01;
  double T = 1.0;
  CflPolicy cfl;

  OutputSpec outputs;
  ConvergenceSpec convergence;
  std::optional<int> threads;
  std::uint64_t seed = 0;
};

/// Parses a JSON run specification. Unknown keys are rejected.
RunSpec parse_run_spec(std::string_view text);
RunSpec load_run_spec(const std::string& path);

}  // namespace ensflow

#endif  // ENSFLOW_RUNSPEC_HPP
