#include "ensflow/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "ensflow/vtk.hpp"
#include "json.hpp"

namespace ensflow {

namespace fs = std::filesystem;
using nlohmann::json;

int resolve_threads(std::optional<int> flag, const RunSpec& spec) {
  if (flag) {
    if (*flag < 1) throw SpecError("--threads", "must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("ENSFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw SpecError("ENSFLOW_THREADS", "expected a positive integer, got '" +
                                             std::string(env) + "'");
    }
    return static_cast<int>(v);
  }
  return spec.threads.value_or(1);
}

Mesh build_mesh(const MeshSpec& m) {
  if (!m.file.empty()) return read_mesh_file(m.file);
  if (m.generator == "unit_square") return generate_unit_square(m.n);
  if (m.generator == "channel") return generate_channel(m.length, m.height, m.n_x, m.n_y, m.hole);
  if (m.generator == "cylinder") return cylinder_mesh(m.n_x, m.n_y);
  if (m.generator == "contraction") return generate_contraction_channel(m.h);
  throw SpecError("mesh.generator", "unknown generator '" + m.generator + "'");
}

namespace {

BoundaryPartition default_partition(const RunSpec& spec, const Mesh& mesh) {
  if (spec.boundary_given) return spec.boundary;
  BoundaryPartition p;
  if (spec.problem.name == "cylinder") {
    p.dirichlet = {tags::kInlet, tags::kWalls, tags::kCylinder};
    p.open = {tags::kOutlet};
    return p;
  }
  if (spec.problem.name == "contraction") {
    p.dirichlet = {tags::kInlet, tags::kWalls};
    p.open = {tags::kOutlet, tags::kTopOutlet};
    return p;
  }
  return BoundaryPartition::all_dirichlet(mesh);
}

std::shared_ptr<const TaylorHoodSpace> build_space(const RunSpec& spec) {
  auto mesh = std::make_shared<const Mesh>(build_mesh(spec.mesh));
  BoundaryPartition partition = default_partition(spec, *mesh);
  partition.validate(*mesh);
  return std::make_shared<const TaylorHoodSpace>(mesh, std::move(partition));
}

MMSFamily mms_family(const RunSpec& spec) {
  MMSFamily f;
  f.J = spec.J;
  f.nu = spec.problem.nu;
  f.epsilon = spec.problem.epsilon;
  return f;
}

std::vector<double> default_viscosities(const RunSpec& spec) {
  if (!spec.nu.empty()) return spec.nu;
  const std::string& name = spec.problem.name;
  if (name == "mms") return mms_family(spec).viscosities();
  if (name == "cylinder") return cylinder_viscosities(spec.J);
  if (name == "contraction") {
    std::vector<double> nu;
    for (int j = 0; j < spec.J; ++j) nu.push_back(0.001 * (2 * j + 1));
    return nu;
  }
  throw SpecError("ensemble.nu", "required for problem '" + name + "'");
}

std::pair<Point, Point> bounding_box(const Mesh& mesh) {
  Point lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  Point hi{-lo[0], -lo[1]};
  for (const Point& v : mesh.vertices()) {
    lo = {std::min(lo[0], v[0]), std::min(lo[1], v[1])};
    hi = {std::max(hi[0], v[0]), std::max(hi[1], v[1])};
  }
  return {lo, hi};
}

VectorField zero_field() {
  return [](double, double, double) -> Point { return {0.0, 0.0}; };
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << std::setprecision(12);
  return os;
}

RunSpec load_with_overrides(const DriverOptions& o) {
  RunSpec spec = load_run_spec(o.spec_path);
  if (o.seed) spec.seed = *o.seed;
  return spec;
}

}  // namespace

PreparedRun prepare_run(const RunSpec& spec, int threads) {
  PreparedRun run;
  run.space = build_space(spec);
  const Mesh& mesh = run.space->mesh();
  const int J = spec.J;
  const std::string& name = spec.problem.name;

  EnsembleConfig& cfg = run.config;
  cfg.nu = default_viscosities(spec);
  cfg.algorithm = spec.algorithm;
  cfg.dt0 = spec.dt0;
  cfg.T_final = spec.T;
  cfg.cfl = spec.cfl;
  cfg.C = spec.C;
  cfg.lambda1 = spec.lambda1;
  cfg.require_guarantee = spec.require_guarantee;
  cfg.threads = threads;
  cfg.theta = spec.theta;

  double max_speed = 1.0;
  if (name == "mms") {
    const MMSFamily fam = mms_family(spec);
    for (int j = 0; j < J; ++j) {
      const MMSFields ex = mms_exact(fam, j);
      run.data.forcing.push_back(mms_forcing(fam, j));
      run.data.dirichlet.push_back(ex.u);
      run.initial.push_back(ex.u);
    }
    if (spec.problem.exact_startup) run.previous = run.initial;
  } else if (name == "cylinder") {
    const bool dirichlet_outlet = run.space->partition().is_dirichlet(tags::kOutlet);
    for (int j = 0; j < J; ++j) {
      run.data.dirichlet.push_back(cylinder_inflow(dirichlet_outlet));
      run.initial.push_back(zero_field());
    }
    run.inlet_diameter = 0.41;
    max_speed = 1.5;
  } else if (name == "contraction") {
    run.data.dirichlet = contraction_inflow(J, spec.problem.epsilon);
    run.initial.assign(J, zero_field());
    run.initial_coeffs = stokes_solutions(run.space, cfg.nu,
                                          contraction_stokes_forcing(J, spec.problem.epsilon),
                                          run.data.dirichlet, 0.0);
    run.inlet_diameter = 1.0;
    max_speed = 1.0 + (J / 2) * spec.problem.epsilon;
  } else if (name == "random") {
    const auto [lo, hi] = bounding_box(mesh);
    for (int j = 0; j < J; ++j) {
      run.initial.push_back(random_stream_field(spec.seed + static_cast<std::uint64_t>(j), lo, hi,
                                                spec.problem.amplitude, spec.problem.modes));
    }
    run.inlet_diameter = hi[1] - lo[1];
  } else {
    run.initial.assign(J, zero_field());
  }

  if (spec.theta_U0_auto) cfg.theta.U0 = max_speed;
  if (spec.gamma_auto) {
    run.gamma_choice = select_gamma(cfg.nu);
    cfg.gamma = run.gamma_choice->gamma;
  } else {
    cfg.gamma = spec.gamma;
  }
  cfg.L = spec.L_tau ? *spec.L_tau * run.inlet_diameter : spec.L;
  try {
    cfg.validate();
  } catch (const EnsembleError& e) {
    throw SpecError("ensemble", e.what());
  }
  return run;
}

int cmd_run(const DriverOptions& o, std::ostream& out) {
  const RunSpec spec = load_with_overrides(o);
  const int threads = resolve_threads(o.threads, spec);
  PreparedRun prep = prepare_run(spec, threads);
  const fs::path dir(o.out_dir);
  ensure_dir(o.out_dir);

  const bool forces = spec.outputs.forces;
  if (forces && !prep.space->mesh().boundary_tags().count(tags::kCylinder)) {
    throw SpecError("outputs.forces", "needs a mesh with a cylinder surface (tag 4)");
  }

  if (prep.config.algorithm == Algorithm::kBaseline) {
    const BaselineRestriction r = check_baseline_restriction(prep.config.nu);
    if (!r.feasible) {
      out << "warning: viscosity spread violates the baseline restriction (required mu = " << r.mu
          << " >= 1); stability is not guaranteed\n";
    }
  }
  const auto wall_start = std::chrono::steady_clock::now();
  EnsembleSolver solver(prep.space, prep.config, prep.data);
  EnsembleState state = solver.initial_state(prep.initial, 0.0,
                                             prep.previous.empty() ? nullptr : &prep.previous);
  if (!prep.initial_coeffs.empty()) {
    state.u = prep.initial_coeffs;
    if (!state.has_history) state.u_prev = state.u;
  }
  const auto sp = prep.space;
  const int J = prep.config.J();

  std::ofstream steps_csv;
  if (spec.outputs.csv) {
    steps_csv = open_output(dir / "steps.csv");
    write_step_csv_header(steps_csv, active_conditions(prep.config.algorithm));
  }
  std::ofstream forces_csv;
  if (forces) {
    forces_csv = open_output(dir / "forces.csv");
    forces_csv << "t,member,drag,lift,pressure_drop\n";
  }
  const bool want_u = std::count(spec.outputs.fields.begin(), spec.outputs.fields.end(),
                                 "velocity") > 0;
  const bool want_p = std::count(spec.outputs.fields.begin(), spec.outputs.fields.end(),
                                 "pressure") > 0;
  auto snapshot = [&](const EnsembleState& s) {
    if (spec.outputs.vtk_every == 0 || s.step % spec.outputs.vtk_every != 0) return;
    ensure_dir((dir / "vtk").string());
    for (int j = 0; j < J; ++j) {
      char name[64];
      std::snprintf(name, sizeof name, "member%d_%06d.vtk", j, s.step);
      std::ofstream os = open_output(dir / "vtk" / name);
      FEFunction u{sp, FieldKind::kVelocity,
                   want_u ? s.u[j] : Vector::Zero(sp->num_velocity()).eval()};
      FEFunction p{sp, FieldKind::kPressure, s.p[j]};
      write_vtk(os, u, want_p ? &p : nullptr, spec.outputs.vtk_subdivide,
                "member " + std::to_string(j) + " t=" + std::to_string(s.t));
    }
  };
  snapshot(state);

  // u^{n-1} of the previous callback, for the BDF2 time derivative in the forces.
  std::vector<Vector> older;
  double last_dt = 0.0;
  auto observer = [&](const EnsembleState& s, const StepReport& r) {
    if (spec.outputs.csv) write_step_csv(steps_csv, r);
    if (forces) {
      const bool bdf2 = is_second_order(r.scheme) && !older.empty() && r.dt == last_dt;
      for (int j = 0; j < J; ++j) {
        const Vector u_t = bdf2 ? ((3.0 * s.u[j] - 4.0 * s.u_prev[j] + older[j]) / (2.0 * r.dt))
                                      .eval()
                                : ((s.u[j] - s.u_prev[j]) / r.dt).eval();
        const Forces f = drag_lift_dp(sp, s.u[j], u_t, s.p[j], prep.config.nu[j]);
        forces_csv << r.t << ',' << j << ',' << f.drag << ',' << f.lift << ','
                   << f.pressure_drop << '\n';
      }
      older = s.u_prev;
      last_dt = r.dt;
    }
    snapshot(s);
  };

  const RunResult res = solver.run(state, observer);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  {
    std::ofstream os = open_output(dir / "halvings.csv");
    write_halving_csv(os, res.halvings);
  }

  std::uint64_t factorizations = 0;
  std::uint64_t solves = 0;
  for (const auto& r : res.steps) {
    factorizations += r.factorizations;
    solves += r.solves;
  }
  json summary;
  summary["algorithm"] = algorithm_name(prep.config.algorithm);
  summary["J"] = J;
  summary["nu"] = prep.config.nu;
  summary["gamma"] = prep.config.gamma;
  summary["sigma"] = prep.config.sigma();
  summary["L"] = prep.config.L;
  summary["theta"] = {{"epsilon", prep.config.theta.epsilon}, {"U0", prep.config.theta.U0}};
  summary["lambda1"] = solver.lambda1() ? json(*solver.lambda1()) : json(nullptr);
  summary["velocity_dofs"] = sp->num_velocity();
  summary["pressure_dofs"] = sp->num_pressure();
  summary["steps"] = res.steps.size();
  summary["final_t"] = state.t;
  summary["final_dt"] = state.dt;
  summary["halvings"] = res.halvings.size();
  summary["factorizations"] = factorizations;
  summary["solves"] = solves;
  summary["factorizations_per_step"] =
      res.steps.empty() ? 0.0 : static_cast<double>(factorizations) / res.steps.size();
  summary["initial_energy"] = res.initial_energy;
  std::vector<double> final_energy;
  for (int j = 0; j < J; ++j) final_energy.push_back(solver.energy(state, j));
  summary["final_energy"] = final_energy;
  if (res.ledger) {
    summary["ledger"] = {{"lhs", res.ledger->lhs},
                         {"rhs", res.ledger->rhs},
                         {"holds", res.ledger->holds}};
  }
  {
    std::ofstream os = open_output(dir / "summary.json");
    os << summary.dump(2) << '\n';
  }

  out << algorithm_name(prep.config.algorithm) << " J=" << J << ": " << res.steps.size()
      << " steps to t=" << state.t << ", " << res.halvings.size() << " halvings, "
      << factorizations << " factorizations, " << solves << " solves ("
      << Factorization::backend() << ", " << std::fixed << std::setprecision(2) << wall
      << " s)\n"
      << std::defaultfloat;
  out << "artifacts written to " << dir.string() << '\n';
  return 0;
}

int cmd_convergence(const DriverOptions& o, std::ostream& out) {
  const RunSpec spec = load_with_overrides(o);
  if (spec.problem.name != "mms") {
    throw SpecError("problem.name", "the convergence study needs the mms problem");
  }
  if (spec.convergence.dts.empty()) throw SpecError("convergence.dts", "missing time steps");
  ConvergenceOptions c;
  c.algorithm = spec.algorithm;
  c.family = mms_family(spec);
  c.gamma = spec.gamma_auto ? select_gamma(c.family.viscosities()).gamma : spec.gamma;
  c.mesh_n = spec.convergence.n.empty() ? std::vector<int>{spec.mesh.n} : spec.convergence.n;
  c.dts = spec.convergence.dts;
  c.T = spec.T;
  c.exact_startup = spec.problem.exact_startup;
  c.halving = spec.cfl.halve_on_violation;
  c.threads = resolve_threads(o.threads, spec);
  const auto rows = convergence_study(c);

  ensure_dir(o.out_dir);
  {
    std::ofstream os = open_output(fs::path(o.out_dir) / "convergence.csv");
    write_convergence_csv(os, rows);
  }
  print_convergence_table(out, rows);
  bool all = true;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < rows[r].u_rate.size(); ++j) {
      for (const auto& [label, rate] : {std::pair{"u", rows[r].u_rate[j]},
                                        std::pair{"p", rows[r].p_rate[j]}}) {
        const bool ok = rate >= kRateLow && rate <= kRateHigh;
        all = all && ok;
        out << "dt=" << rows[r].dt << " member " << j + 1 << ' ' << label << " rate "
            << std::fixed << std::setprecision(4) << rate << std::defaultfloat << ' '
            << (ok ? "PASS" : "FAIL") << '\n';
      }
    }
  }
  if (rows.size() > 1) {
    out << "rate band [" << kRateLow << ", " << kRateHigh << "]: " << (all ? "PASS" : "FAIL")
        << '\n';
  }
  return 0;
}

int cmd_eig(const DriverOptions& o, std::ostream& out) {
  const RunSpec spec = load_with_overrides(o);
  const auto space = build_space(spec);
  const OperatorSet ops = assemble_core(*space);
  const EigenResult r = mixed_eigenvalue(*space, ops);
  out << std::setprecision(10);
  out << "lambda1 = " << r.lambda << '\n';
  if (space->constrained_velocity_dofs().empty()) {
    out << "note: no Dirichlet boundary, the mixed problem has the constant mode (lambda1 = 0)\n";
  } else {
    out << "iterations = " << r.iterations << ", residual = " << r.residual << '\n';
  }
  out << "scalar P2 dofs = " << space->num_p2() << '\n';
  return 0;
}

int cmd_calibrate_c(const DriverOptions& o, std::ostream& out) {
  const RunSpec spec = load_with_overrides(o);
  const auto space = build_space(spec);
  const InverseConstant c = calibrate_inverse_constant(*space);
  const MeshMetrics m = mesh_metrics(space->mesh());
  out << std::setprecision(10);
  out << "C = " << c.C << " (worst triangle " << c.worst_triangle << ", h = " << m.h << ")\n";
  return 0;
}

int cmd_mesh_info(const std::string& path, std::ostream& out) {
  const bool is_spec = fs::path(path).extension() == ".json";
  const Mesh mesh = is_spec ? build_mesh(load_run_spec(path).mesh) : read_mesh_file(path);
  const MeshMetrics m = mesh_metrics(mesh);
  std::map<BoundaryTag, int> per_tag;
  for (const auto& e : mesh.boundary_edges()) ++per_tag[e.tag];
  const double min_area = m.areas.empty() ? 0.0 : *std::min_element(m.areas.begin(), m.areas.end());
  out << std::setprecision(10);
  out << "vertices       " << mesh.num_vertices() << '\n'
      << "triangles      " << mesh.num_triangles() << '\n'
      << "edges          " << mesh.num_edges() << '\n'
      << "boundary edges " << mesh.boundary_edges().size() << '\n';
  for (const auto& [tag, count] : per_tag) out << "  tag " << tag << ": " << count << '\n';
  out << "h              " << m.h << '\n'
      << "diam           " << m.diam << '\n'
      << "area           " << m.area << '\n'
      << "min area       " << min_area << '\n'
      << "P2/P1 dofs     " << 2 * (mesh.num_vertices() + mesh.num_edges()) << " / "
      << mesh.num_vertices() << '\n';
  return 0;
}

}  // namespace ensflow
