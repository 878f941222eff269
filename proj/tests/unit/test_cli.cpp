#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "ensflow/driver.hpp"
#include "ensflow/runspec.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace ensflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ensflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_spec(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "spec.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SpecError spec_error(const std::string& text) {
  try {
    parse_run_spec(text);
  } catch (const SpecError& e) {
    return e;
  }
  FAIL("expected a SpecError");
  return SpecError("", "");
}

const char* kSmoke = R"({
  "mesh": {"generator": "unit_square", "n": 3},
  "problem": {"name": "mms"},
  "ensemble": {"J": 1},
  "algorithm": "A1",
  "time": {"dt0": 0.05, "T": 0.15},
  "outputs": {"csv": true, "vtk_every": 3}
})";

}  // namespace

TEST_CASE("spec defaults and values") {
  const RunSpec s = parse_run_spec(kSmoke);
  CHECK(s.mesh.generator == "unit_square");
  CHECK(s.mesh.n == 3);
  CHECK(s.J == 1);
  CHECK(s.algorithm == Algorithm::kA1);
  CHECK(s.dt0 == 0.05);
  CHECK(s.T == 0.15);
  CHECK(s.outputs.vtk_every == 3);

  const RunSpec a = parse_run_spec(R"({"mesh": {"generator": "unit_square"},
    "ensemble": {"J": 2, "nu": [1, 2], "gamma": "auto", "L": "auto:0.02"}, "algorithm": "A4"})");
  CHECK(a.gamma_auto);
  REQUIRE(a.L_tau.has_value());
  CHECK(*a.L_tau == 0.02);
}

TEST_CASE("syntax errors carry line and column") {
  const SpecError e = spec_error("{\n  \"mesh\": {\"generator\": \"unit_square\"},\n  \"J\" 3\n}");
  CHECK(e.line() == 3);
  CHECK(e.column() > 0);
  CHECK(std::string(e.what()).find("line 3") != std::string::npos);
}

TEST_CASE("field errors name the field") {
  const SpecError alg =
      spec_error(R"({"mesh": {"generator": "unit_square"}, "ensemble": {"J": 1, "nu": [1]},
                  "algorithm": "A9"})");
  CHECK(alg.field() == "algorithm");
  CHECK(std::string(alg.what()).find("'algorithm'") != std::string::npos);

  const SpecError unknown =
      spec_error(R"({"mesh": {"generator": "unit_square", "size": 3}, "ensemble": {"J": 1}})");
  CHECK(unknown.field() == "mesh.size");

  const SpecError type = spec_error(R"({"mesh": {"generator": "unit_square", "n": "ten"}, "ensemble": {"J": 1}})");
  CHECK(type.field() == "mesh.n");

  const SpecError both =
      spec_error(R"({"mesh": {"generator": "unit_square", "file": "a.msh"}, "ensemble": {"J": 1}})");
  CHECK(both.field().rfind("mesh", 0) == 0);

  const SpecError gamma = spec_error(R"({"mesh": {"generator": "unit_square"},
    "ensemble": {"J": 2, "nu": [1, 2], "gamma": 2.5}, "algorithm": "A4"})");
  CHECK(gamma.field() == "ensemble.gamma");
  CHECK(std::string(gamma.what()).find("[0, 2)") != std::string::npos);
}

TEST_CASE("run writes artifacts with one factorization per step") {
  const fs::path dir = scratch("smoke");
  DriverOptions o;
  o.spec_path = write_spec(dir, kSmoke).string();
  o.out_dir = (dir / "out").string();
  std::ostringstream log;
  CHECK(cmd_run(o, log) == 0);
  CHECK(fs::exists(dir / "out" / "steps.csv"));
  CHECK(fs::exists(dir / "out" / "halvings.csv"));
  CHECK(fs::exists(dir / "out" / "vtk" / "member0_000003.vtk"));
  const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary["steps"] == 3);
  CHECK(summary["factorizations"] == 3);
  CHECK(summary["solves"] == 3);
  CHECK(summary["factorizations_per_step"] == 1.0);
  CHECK(log.str().find("3 factorizations") != std::string::npos);
}

TEST_CASE("same spec and seed give byte-identical CSV") {
  const std::string spec = R"({
    "mesh": {"generator": "unit_square", "n": 3},
    "problem": {"name": "random"},
    "ensemble": {"J": 2, "nu": [1.0, 1.5]},
    "algorithm": "A4",
    "time": {"dt0": 0.01, "T": 0.05},
    "seed": 42
  })";
  const fs::path dir = scratch("determinism");
  DriverOptions o;
  o.spec_path = write_spec(dir, spec).string();
  std::ostringstream log;
  o.out_dir = (dir / "a").string();
  cmd_run(o, log);
  o.out_dir = (dir / "b").string();
  cmd_run(o, log);
  CHECK(slurp(dir / "a" / "steps.csv") == slurp(dir / "b" / "steps.csv"));
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  o.seed = 43;
  o.out_dir = (dir / "c").string();
  cmd_run(o, log);
  CHECK(slurp(dir / "a" / "steps.csv") != slurp(dir / "c" / "steps.csv"));
}

TEST_CASE("single-row convergence has empty rates") {
  const fs::path dir = scratch("conv");
  DriverOptions o;
  o.spec_path = write_spec(dir, R"({
    "mesh": {"generator": "unit_square", "n": 2},
    "problem": {"name": "mms"},
    "ensemble": {"J": 2, "gamma": 1.5},
    "algorithm": "A4",
    "time": {"T": 0.05},
    "convergence": {"dts": [0.01]}
  })").string();
  o.out_dir = dir.string();
  std::ostringstream log;
  CHECK(cmd_convergence(o, log) == 0);
  std::istringstream csv(slurp(dir / "convergence.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(row.find(",,") != std::string::npos);
  CHECK(log.str().find("rate band") == std::string::npos);
}

TEST_CASE("eig reports zero without Dirichlet data") {
  const fs::path dir = scratch("eig");
  DriverOptions o;
  o.spec_path = write_spec(dir, R"({
    "mesh": {"generator": "unit_square", "n": 2},
    "boundary": {"dirichlet": [], "open": [1, 2, 3, 4]},
    "ensemble": {"J": 1, "nu": [1.0]}
  })").string();
  std::ostringstream log;
  CHECK(cmd_eig(o, log) == 0);
  CHECK(log.str().find("lambda1 = 0\n") != std::string::npos);

  o.spec_path = test::data_path("strip.json");
  std::ostringstream strip;
  cmd_eig(o, strip);
  CHECK(strip.str().find("lambda1 = 2.4674") != std::string::npos);
}

TEST_CASE("mesh-info") {
  std::ostringstream good;
  CHECK(cmd_mesh_info(test::data_path("square.msh"), good) == 0);
  CHECK(good.str().find("vertices       4") != std::string::npos);
  std::ostringstream bad;
  CHECK_THROWS_AS(cmd_mesh_info(test::data_path("bad_node.msh"), bad), MeshError);
}

TEST_CASE("thread precedence") {
  RunSpec s = parse_run_spec(kSmoke);
  s.threads = 3;
  CHECK(resolve_threads(std::nullopt, s) == 3);
  CHECK(resolve_threads(5, s) == 5);
  s.threads.reset();
  CHECK(resolve_threads(std::nullopt, s) >= 1);
}
