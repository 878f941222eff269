#include "ensflow/runspec.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ensflow {

using nlohmann::json;

namespace {

std::string format_message(const std::string& field, const std::string& message, int line,
                           int column) {
  if (line > 0) {
    return "spec parse error at line " + std::to_string(line) + ", column " +
           std::to_string(column) + ": " + message;
  }
  if (field.empty()) return message;
  return "spec field '" + field + "': " + message;
}

/// Walks one JSON object, recording consumed keys so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SpecError(path_, "expected an object");
  }

  std::string path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw SpecError(path(key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw SpecError(path(key), "expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw SpecError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw SpecError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) throw SpecError(path(key), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw SpecError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) {
    std::vector<int> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) throw SpecError(path(key), "expected an array of integers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) {
        throw SpecError(path(key) + "[" + std::to_string(i) + "]", "expected an integer");
      }
      out.push_back(v[i].get<int>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw SpecError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_mesh(Section& root, RunSpec& spec) {
  if (!root.has("mesh")) throw SpecError("mesh", "missing mesh section");
  Section s(root.at("mesh"), "mesh");
  MeshSpec& m = spec.mesh;
  const bool has_gen = s.has("generator");
  const bool has_file = s.has("file");
  if (has_gen == has_file) {
    throw SpecError("mesh", "exactly one of 'generator' and 'file' must be given");
  }
  if (has_file) {
    m.file = s.string("file", "");
  } else {
    m.generator = s.string("generator", "");
    if (m.generator == "unit_square") {
      m.n = s.integer("n", m.n);
      if (m.n < 1) throw SpecError("mesh.n", "must be at least 1");
    } else if (m.generator == "channel" || m.generator == "cylinder") {
      if (m.generator == "channel") {
        m.length = s.number("length", m.length);
        m.height = s.number("height", m.height);
      }
      m.n_x = s.integer("n_x", m.n_x);
      m.n_y = s.integer("n_y", m.n_y);
      if (m.n_x < 1) throw SpecError("mesh.n_x", "must be at least 1");
      if (m.n_y < 1) throw SpecError("mesh.n_y", "must be at least 1");
      if (m.generator == "channel" && s.has("hole")) {
        Section h(s.at("hole"), "mesh.hole");
        const std::vector<double> c = h.numbers("center");
        if (c.size() != 2) throw SpecError("mesh.hole.center", "expected [x, y]");
        m.hole = Hole{{c[0], c[1]}, h.number("radius", 0.0)};
        if (!(m.hole->radius > 0.0)) throw SpecError("mesh.hole.radius", "must be positive");
        h.finish();
      }
    } else if (m.generator == "contraction") {
      m.h = s.number("h", m.h);
      if (!(m.h > 0.0)) throw SpecError("mesh.h", "must be positive");
    } else {
      throw SpecError("mesh.generator", "unknown generator '" + m.generator +
                                            "' (expected unit_square, channel, cylinder, "
                                            "contraction)");
    }
  }
  s.finish();
}

void parse_boundary(Section& root, RunSpec& spec) {
  if (!root.has("boundary")) return;
  Section s(root.at("boundary"), "boundary");
  for (int t : s.integers("dirichlet")) spec.boundary.dirichlet.insert(t);
  for (int t : s.integers("open")) spec.boundary.open.insert(t);
  for (int t : spec.boundary.open) {
    if (spec.boundary.dirichlet.count(t)) {
      throw SpecError("boundary", "tag " + std::to_string(t) + " is both Dirichlet and open");
    }
  }
  spec.boundary_given = true;
  s.finish();
}

void parse_problem(Section& root, RunSpec& spec) {
  if (!root.has("problem")) return;
  Section s(root.at("problem"), "problem");
  ProblemSpec& p = spec.problem;
  p.name = s.string("name", p.name);
  static const std::set<std::string> known{"zero", "random", "mms", "cylinder", "contraction"};
  if (!known.count(p.name)) {
    throw SpecError("problem.name", "unknown problem '" + p.name +
                                        "' (expected zero, random, mms, cylinder, contraction)");
  }
  p.epsilon = s.number("epsilon", p.name == "contraction" ? 0.01 : p.epsilon);
  p.nu = s.number("nu", p.nu);
  if (!(p.nu > 0.0)) throw SpecError("problem.nu", "must be positive");
  p.amplitude = s.number("amplitude", p.amplitude);
  p.modes = s.integer("modes", p.modes);
  p.exact_startup = s.boolean("exact_startup", p.exact_startup);
  if (p.modes < 1) throw SpecError("problem.modes", "must be at least 1");
  s.finish();
}

void parse_ensemble(Section& root, RunSpec& spec) {
  if (!root.has("ensemble")) throw SpecError("ensemble", "missing ensemble section");
  Section s(root.at("ensemble"), "ensemble");
  spec.J = s.integer("J", spec.J);
  if (spec.J < 1) throw SpecError("ensemble.J", "must be at least 1");
  spec.nu = s.numbers("nu");
  if (!spec.nu.empty() && static_cast<int>(spec.nu.size()) != spec.J) {
    throw SpecError("ensemble.nu", "expected " + std::to_string(spec.J) + " viscosities, got " +
                                       std::to_string(spec.nu.size()));
  }
  for (std::size_t i = 0; i < spec.nu.size(); ++i) {
    if (!(spec.nu[i] > 0.0)) {
      throw SpecError("ensemble.nu[" + std::to_string(i) + "]", "viscosity must be positive");
    }
  }
  if (s.has("gamma")) {
    const json& g = s.at("gamma");
    if (g.is_string() && g.get<std::string>() == "auto") {
      spec.gamma_auto = true;
    } else if (g.is_number()) {
      spec.gamma = g.get<double>();
    } else {
      throw SpecError("ensemble.gamma", "expected a number or \"auto\"");
    }
  }
  if (s.has("L")) {
    const json& l = s.at("L");
    if (l.is_number()) {
      spec.L = l.get<double>();
      spec.L_tau.reset();
      if (spec.L < 0.0) throw SpecError("ensemble.L", "must be non-negative");
    } else if (l.is_string() && l.get<std::string>().rfind("auto:", 0) == 0) {
      const std::string tau = l.get<std::string>().substr(5);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tau, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != tau.size() || v < 0.0) {
        throw SpecError("ensemble.L", "expected \"auto:tau\" with tau a non-negative number");
      }
      spec.L_tau = v;
    } else {
      throw SpecError("ensemble.L", "expected a number or \"auto:tau\"");
    }
  }
  if (s.has("theta")) {
    Section t(s.at("theta"), "ensemble.theta");
    spec.theta.epsilon = t.number("epsilon", spec.theta.epsilon);
    if (t.has("U0")) {
      const json& u = t.at("U0");
      if (u.is_number()) {
        spec.theta.U0 = u.get<double>();
        spec.theta_U0_auto = false;
      } else if (!(u.is_string() && u.get<std::string>() == "auto")) {
        throw SpecError("ensemble.theta.U0", "expected a number or \"auto\"");
      }
    }
    if (!(spec.theta.epsilon > 0.0)) throw SpecError("ensemble.theta.epsilon", "must be positive");
    if (!(spec.theta.U0 > 0.0)) throw SpecError("ensemble.theta.U0", "must be positive");
    t.finish();
  }
  spec.C = s.number("C", spec.C);
  if (!(spec.C > 0.0)) throw SpecError("ensemble.C", "must be positive");
  if (s.has("lambda1")) spec.lambda1 = s.number("lambda1", 0.0);
  spec.require_guarantee = s.boolean("require_guarantee", spec.require_guarantee);
  s.finish();
}

void parse_time(Section& root, RunSpec& spec) {
  if (!root.has("time")) return;
  Section s(root.at("time"), "time");
  spec.dt0 = s.number("dt0", spec.dt0);
  spec.T = s.number("T", spec.T);
  spec.cfl.dt_floor = s.number("floor", spec.cfl.dt_floor);
  spec.cfl.halve_on_violation = s.boolean("halve", spec.cfl.halve_on_violation);
  spec.cfl.safety = s.number("safety", spec.cfl.safety);
  if (!(spec.dt0 > 0.0)) throw SpecError("time.dt0", "must be positive");
  if (!(spec.T > 0.0)) throw SpecError("time.T", "must be positive");
  if (!(spec.cfl.dt_floor > 0.0)) throw SpecError("time.floor", "must be positive");
  if (!(spec.cfl.safety > 0.0)) throw SpecError("time.safety", "must be positive");
  s.finish();
}

void parse_outputs(Section& root, RunSpec& spec) {
  if (!root.has("outputs")) return;
  Section s(root.at("outputs"), "outputs");
  OutputSpec& o = spec.outputs;
  o.csv = s.boolean("csv", o.csv);
  o.vtk_every = s.integer("vtk_every", o.vtk_every);
  o.vtk_subdivide = s.boolean("vtk_subdivide", o.vtk_subdivide);
  o.forces = s.boolean("forces", o.forces);
  if (o.vtk_every < 0) throw SpecError("outputs.vtk_every", "must be non-negative");
  if (s.has("fields")) {
    const json& f = s.at("fields");
    if (!f.is_array()) throw SpecError("outputs.fields", "expected an array of strings");
    o.fields.clear();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string field = "outputs.fields[" + std::to_string(i) + "]";
      if (!f[i].is_string()) throw SpecError(field, "expected a string");
      const std::string name = f[i].get<std::string>();
      if (name != "velocity" && name != "pressure") {
        throw SpecError(field, "unknown field '" + name + "' (expected velocity, pressure)");
      }
      o.fields.push_back(name);
    }
  }
  s.finish();
}

void parse_convergence(Section& root, RunSpec& spec) {
  if (!root.has("convergence")) return;
  Section s(root.at("convergence"), "convergence");
  spec.convergence.dts = s.numbers("dts");
  spec.convergence.n = s.integers("n");
  for (std::size_t i = 0; i < spec.convergence.dts.size(); ++i) {
    if (!(spec.convergence.dts[i] > 0.0)) {
      throw SpecError("convergence.dts[" + std::to_string(i) + "]", "must be positive");
    }
  }
  const std::size_t nn = spec.convergence.n.size();
  if (nn > 1 && nn != spec.convergence.dts.size()) {
    throw SpecError("convergence.n", "expected one entry or one per time step");
  }
  s.finish();
}

void check_consistency(RunSpec& spec) {
  if (is_second_order(spec.algorithm) && !spec.gamma_auto &&
      !(spec.gamma >= 0.0 && spec.gamma < 2.0)) {
    throw SpecError("ensemble.gamma", "second-order schemes require gamma in [0, 2), got " +
                                          std::to_string(spec.gamma));
  }
  if (spec.problem.name == "mms" && !spec.mesh.file.empty()) {
    throw SpecError("mesh", "the mms problem needs the unit_square generator");
  }
  if (spec.problem.name == "mms" && !spec.nu.empty()) {
    throw SpecError("ensemble.nu", "the mms problem derives viscosities from problem.nu");
  }
  if (spec.problem.name == "mms" && spec.mesh.generator != "unit_square") {
    throw SpecError("mesh.generator", "the mms problem needs the unit_square generator");
  }
}

}  // namespace

SpecError::SpecError(std::string field, const std::string& message, int line, int column)
    : std::runtime_error(format_message(field, message, line, column)),
      field_(std::move(field)),
      line_(line),
      column_(column) {}

RunSpec parse_run_spec(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Byte offsets are 1-based and point just past the offending character.
    const std::size_t at = e.byte > 0 ? std::min<std::size_t>(e.byte - 1, text.size()) : 0;
    int line = 1;
    int column = 1;
    for (std::size_t i = 0; i < at; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string msg = e.what();
    const auto colon = msg.rfind(": ");
    if (colon != std::string::npos) msg = msg.substr(colon + 2);
    throw SpecError("", msg, line, column);
  }

  RunSpec spec;
  Section s(root, "");
  parse_mesh(s, spec);
  parse_boundary(s, spec);
  parse_problem(s, spec);
  parse_ensemble(s, spec);
  if (s.has("algorithm")) {
    const std::string name = s.string("algorithm", "");
    try {
      spec.algorithm = parse_algorithm(name);
    } catch (const EnsembleError& e) {
      throw SpecError("algorithm", e.what());
    }
  }
  parse_time(s, spec);
  parse_outputs(s, spec);
  parse_convergence(s, spec);
  if (s.has("threads")) {
    spec.threads = s.integer("threads", 1);
    if (*spec.threads < 1) throw SpecError("threads", "must be at least 1");
  }
  if (s.has("seed")) {
    const json& v = s.at("seed");
    if (!v.is_number_unsigned()) throw SpecError("seed", "expected a non-negative integer");
    spec.seed = v.get<std::uint64_t>();
  }
  s.finish();
  check_consistency(spec);
  return spec;
}

RunSpec load_run_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("", "cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_spec(ss.str());
}

}  // namespace ensflow
