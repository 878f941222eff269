#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ensflow/driver.hpp"

namespace {

struct Flags {
  std::string spec;
  std::string out_dir = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--spec", f.spec, "JSON run specification")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", f.out_dir, "directory for artifacts");
  cmd->add_option("--threads", f.threads, "worker threads (overrides ENSFLOW_THREADS)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "seed for randomized initial data");
}

ensflow::DriverOptions to_options(const Flags& f) {
  ensflow::DriverOptions o;
  o.spec_path = f.spec;
  o.out_dir = f.out_dir;
  o.threads = f.threads;
  o.seed = f.seed;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Navier-Stokes solver"};
  app.require_subcommand(1);

  Flags run_f, conv_f, eig_f, cal_f;
  auto* run = app.add_subcommand("run", "time-step an ensemble and write artifacts");
  add_common(run, run_f);
  auto* conv = app.add_subcommand("convergence", "manufactured-solution convergence table");
  add_common(conv, conv_f);
  auto* eig = app.add_subcommand("eig", "smallest mixed Dirichlet-Neumann eigenvalue");
  add_common(eig, eig_f);
  auto* cal = app.add_subcommand("calibrate-c", "inverse-inequality constant of the mesh");
  add_common(cal, cal_f);
  std::string mesh_path;
  auto* info = app.add_subcommand("mesh-info", "mesh metrics of a mesh file or run spec");
  info->add_option("path", mesh_path, "Gmsh v2.2 / plain-text mesh or JSON spec")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return ensflow::cmd_run(to_options(run_f), std::cout);
    if (*conv) return ensflow::cmd_convergence(to_options(conv_f), std::cout);
    if (*eig) return ensflow::cmd_eig(to_options(eig_f), std::cout);
    if (*cal) return ensflow::cmd_calibrate_c(to_options(cal_f), std::cout);
    if (*info) return ensflow::cmd_mesh_info(mesh_path, std::cout);
  } catch (const ensflow::SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
