#ifndef ENSFLOW_DRIVER_HPP
#define ENSFLOW_DRIVER_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ensflow/experiments.hpp"
#include "ensflow/runspec.hpp"

namespace ensflow {

/// Command-line overrides shared by all commands.
struct DriverOptions {
  std::string spec_path;
  std::string out_dir = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

/// Thread count: command-line flag, then ENSFLOW_THREADS, then the spec, then 1.
int resolve_threads(std::optional<int> flag, const RunSpec& spec);

Mesh build_mesh(const MeshSpec& spec);

/// Everything needed to start an ensemble run from a spec.
struct PreparedRun {
  std::shared_ptr<const TaylorHoodSpace> space;
  EnsembleConfig config;
  EnsembleData data;
  std::vector<VectorField> initial;
  /// Closed-form fields at -dt0 for the BDF2 startup (mms only).
  std::vector<VectorField> previous;
  /// Precomputed initial coefficients (Stokes initialisation), overriding `initial`.
  std::vector<Vector> initial_coeffs;
  std::optional<GammaChoice> gamma_choice;
  double inlet_diameter = 1.0;
};

PreparedRun prepare_run(const RunSpec& spec, int threads);

/// Commands. Each returns the process exit status; failures throw.
int cmd_run(const DriverOptions& options, std::ostream& out);
int cmd_convergence(const DriverOptions& options, std::ostream& out);
int cmd_eig(const DriverOptions& options, std::ostream& out);
int cmd_calibrate_c(const DriverOptions& options, std::ostream& out);
/// `path` is a mesh file (Gmsh v2.2 or plain text) or a JSON run spec.
int cmd_mesh_info(const std::string& path, std::ostream& out);

/// Acceptance band for observed convergence rates.
inline constexpr double kRateLow = 1.85;
inline constexpr double kRateHigh = 2.15;

}  // namespace ensflow

#endif  // ENSFLOW_DRIVER_HPP
