#include "ensflow/experiments.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ensflow/quadrature.hpp"

namespace ensflow {

double MMSFamily::offset(int j) const {
  const int k = j + 1;
  const int half = J / 2;
  return k <= half ? k * epsilon : -(k - half) * epsilon;
}

std::vector<double> MMSFamily::viscosities() const {
  std::vector<double> out;
  for (int j = 0; j < J; ++j) out.push_back(viscosity(j));
  return out;
}

MMSFields mms_exact(const MMSFamily& family, int j) {
  const double s = family.scale(j);
  MMSFields f;
  f.u = [s](double x, double y, double t) -> Point {
    return {s * (x * x - y * std::sin(t)), s * (-2.0 * x * y + x * std::cos(t))};
  };
  f.p = [s](double x, double y, double t) { return s * (x + y - 1.0) * std::sin(t); };
  return f;
}

VectorField mms_forcing(const MMSFamily& family, int j) {
  const double s = family.scale(j);
  const double nu = family.nu;
  return [s, nu](double x, double y, double t) -> Point {
    const double st = std::sin(t);
    const double ct = std::cos(t);
    const double u1 = x * x - y * st;
    const double u2 = -2.0 * x * y + x * ct;
    const double adv1 = u1 * 2.0 * x + u2 * (-st);
    const double adv2 = u1 * (-2.0 * y + ct) + u2 * (-2.0 * x);
    return {s * (-y * ct) + s * s * adv1 - s * s * nu * 2.0 + s * st,
            s * (-x * st) + s * s * adv2 + s * st};
  };
}

std::vector<ConvergenceRow> convergence_study(const ConvergenceOptions& o) {
  if (o.dts.empty()) throw std::invalid_argument("convergence study needs at least one dt");
  if (o.mesh_n.size() != 1 && o.mesh_n.size() != o.dts.size()) {
    throw std::invalid_argument("mesh_n must have one entry or one per dt");
  }
  const MMSFamily& fam = o.family;
  std::vector<ConvergenceRow> rows;
  for (std::size_t r = 0; r < o.dts.size(); ++r) {
    const int n = o.mesh_n.size() == 1 ? o.mesh_n[0] : o.mesh_n[r];
    auto mesh = std::make_shared<const Mesh>(generate_unit_square(n));
    auto space = std::make_shared<const TaylorHoodSpace>(
        mesh, BoundaryPartition::all_dirichlet(*mesh));

    EnsembleConfig cfg;
    cfg.nu = fam.viscosities();
    cfg.algorithm = o.algorithm;
    cfg.gamma = o.gamma;
    cfg.dt0 = o.dts[r];
    cfg.T_final = o.T;
    cfg.cfl.halve_on_violation = o.halving;
    cfg.threads = o.threads;

    EnsembleData data;
    std::vector<VectorField> u0, prev;
    std::vector<MMSFields> exact;
    for (int j = 0; j < fam.J; ++j) {
      exact.push_back(mms_exact(fam, j));
      data.forcing.push_back(mms_forcing(fam, j));
      data.dirichlet.push_back(exact.back().u);
      u0.push_back(exact.back().u);
    }
    EnsembleSolver solver(space, cfg, data);
    EnsembleState s = solver.initial_state(u0, 0.0, o.exact_startup ? &u0 : nullptr);
    const RunResult res = solver.run(s);

    ConvergenceRow row;
    row.dt = o.dts[r];
    row.n = n;
    row.halvings = res.halvings.size();
    row.steps = res.steps.size();
    for (int j = 0; j < fam.J; ++j) {
      row.u_error.push_back(
          l2_error(FEFunction{space, FieldKind::kVelocity, s.u[j]}, exact[j].u, s.t));
      row.p_error.push_back(
          l2_error(FEFunction{space, FieldKind::kPressure, s.p[j]}, exact[j].p, s.t));
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.u_rate.assign(fam.J, nan);
    row.p_rate.assign(fam.J, nan);
    if (!rows.empty()) {
      const auto& prev_row = rows.back();
      const double ratio = std::log(prev_row.dt / row.dt);
      for (int j = 0; j < fam.J; ++j) {
        row.u_rate[j] = std::log(prev_row.u_error[j] / row.u_error[j]) / ratio;
        row.p_rate[j] = std::log(prev_row.p_error[j] / row.p_error[j]) / ratio;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  if (rows.empty()) return;
  const std::size_t J = rows.front().u_error.size();
  os << "dt,n";
  for (std::size_t j = 0; j < J; ++j) {
    os << ",u" << j + 1 << "_L2,u" << j + 1 << "_rate,p" << j + 1 << "_L2,p" << j + 1
       << "_rate";
  }
  os << '\n';
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.dt << ',' << r.n;
    for (std::size_t j = 0; j < J; ++j) {
      os << ',' << r.u_error[j] << ',';
      if (!std::isnan(r.u_rate[j])) os << r.u_rate[j];
      os << ',' << r.p_error[j] << ',';
      if (!std::isnan(r.p_rate[j])) os << r.p_rate[j];
    }
    os << '\n';
  }
}

void print_convergence_table(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  if (rows.empty()) return;
  const std::size_t J = rows.front().u_error.size();
  os << std::left << std::setw(12) << "dt" << std::setw(5) << "n";
  for (std::size_t j = 0; j < J; ++j) {
    const std::string k = std::to_string(j + 1);
    os << std::setw(14) << ("|u" + k + "-u" + k + "h|") << std::setw(8) << "rate"
       << std::setw(14) << ("|p" + k + "-p" + k + "h|") << std::setw(8) << "rate";
  }
  os << '\n';
  for (const auto& r : rows) {
    os << std::setw(12) << r.dt << std::setw(5) << r.n;
    for (std::size_t j = 0; j < J; ++j) {
      auto rate = [](double v) {
        if (std::isnan(v)) return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << v;
        return s.str();
      };
      std::ostringstream e1, e2;
      e1 << std::scientific << std::setprecision(5) << r.u_error[j];
      e2 << std::scientific << std::setprecision(5) << r.p_error[j];
      os << std::setw(14) << e1.str() << std::setw(8) << rate(r.u_rate[j]) << std::setw(14)
         << e2.str() << std::setw(8) << rate(r.p_rate[j]);
    }
    os << '\n';
  }
}

std::vector<double> cylinder_viscosities(int J) {
  static const double all[] = {1.0 / 1000, 1.0 / 900,  1.0 / 800, 1.0 / 700,
                               1.0 / 1100, 1.0 / 1200, 1.0 / 1300};
  if (J < 1 || J > 7) throw std::invalid_argument("cylinder ensemble supports 1..7 members");
  return {all, all + J};
}

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLength = 2.2;
constexpr double kHeight = 0.41;
}  // namespace

Mesh cylinder_mesh(int n_x, int n_y) {
  return generate_channel(kLength, kHeight, n_x, n_y, Hole{{0.2, 0.2}, 0.05});
}

VectorField cylinder_inflow(bool dirichlet_outlet) {
  return [dirichlet_outlet](double x, double y, double t) -> Point {
    const bool on_inlet = x < 1e-9;
    const bool on_outlet = dirichlet_outlet && x > kLength - 1e-9;
    if (!on_inlet && !on_outlet) return {0.0, 0.0};
    return {6.0 / (kHeight * kHeight) * std::sin(kPi * t / 8.0) * y * (kHeight - y), 0.0};
  };
}

Problem cylinder_problem(const CylinderOptions& o) {
  Problem pb;
  pb.mesh = std::make_shared<const Mesh>(cylinder_mesh(o.n_x, o.n_y));
  pb.partition.dirichlet = {tags::kInlet, tags::kWalls, tags::kCylinder};
  if (o.open_outflow) {
    pb.partition.open = {tags::kOutlet};
  } else {
    pb.partition.dirichlet.insert(tags::kOutlet);
  }
  const VectorField inflow = cylinder_inflow(!o.open_outflow);
  for (int j = 0; j < o.J; ++j) {
    pb.data.dirichlet.push_back(inflow);
    pb.initial.push_back([](double, double, double) -> Point { return {0.0, 0.0}; });
  }
  pb.inlet_diameter = kHeight;
  pb.max_inlet_speed = 1.5;
  return pb;
}

std::vector<VectorField> contraction_inflow(int J, double eps) {
  std::vector<VectorField> out;
  for (int j = 0; j < J; ++j) {
    const int k = (j + 1) / 2;
    const double s = 1.0 + (j % 2 == 1 ? k * eps : -k * eps);
    out.push_back([s](double x, double y, double) -> Point {
      if (x > 1e-9) return {0.0, 0.0};
      return {s * 4.0 * y * (1.0 - y), 0.0};
    });
  }
  return out;
}

std::vector<VectorField> contraction_stokes_forcing(int J, double eps) {
  std::vector<VectorField> out;
  for (int j = 0; j < J; ++j) {
    switch (j % 3) {
      case 0:
        out.push_back([](double, double, double) -> Point { return {0.0, 0.0}; });
        break;
      case 1:
        out.push_back([eps](double x, double y, double t) -> Point {
          return {eps * std::cos(kPi * x * y + t), eps * std::sin(kPi * (x + y) + t)};
        });
        break;
      default:
        out.push_back([eps](double x, double y, double t) -> Point {
          return {eps * std::sin(kPi * (x + y) + t), eps * std::cos(kPi * x * y + t)};
        });
        break;
    }
  }
  return out;
}

Problem contraction_problem(const ContractionOptions& o) {
  Problem pb;
  pb.mesh = std::make_shared<const Mesh>(generate_contraction_channel(o.h));
  pb.partition.dirichlet = {tags::kInlet, tags::kWalls};
  pb.partition.open = {tags::kOutlet, tags::kTopOutlet};
  pb.data.dirichlet = contraction_inflow(o.J, o.epsilon);
  pb.stokes_forcing = contraction_stokes_forcing(o.J, o.epsilon);
  pb.inlet_diameter = 1.0;
  pb.max_inlet_speed = 1.0 + (o.J / 2) * o.epsilon;
  return pb;
}

VectorField random_stream_field(std::uint64_t seed, Point lower, Point upper,
                                double amplitude, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_int_distribution<int> freq(1, 3);
  struct Mode {
    double a, alpha, phi, beta, chi;
  };
  std::vector<Mode> ms;
  const double wx = upper[0] - lower[0];
  const double wy = upper[1] - lower[1];
  for (int k = 0; k < modes; ++k) {
    Mode m;
    m.a = coef(rng);
    m.alpha = freq(rng) * kPi / wx;
    m.phi = phase(rng);
    m.beta = freq(rng) * kPi / wy;
    m.chi = phase(rng);
    ms.push_back(m);
  }
  // Normalize so that the bubble peak (q = 1/4 on a unit box) gives O(1) speeds.
  const double scale = amplitude * 256.0 / (wx * wx * wx * wx) * (wx / wy);
  return [ms, lower, wx, wy, scale](double x, double y, double) -> Point {
    const double X = (x - lower[0]) / wx;
    const double Y = (y - lower[1]) / wy;
    const double qx = X * (1.0 - X), qy = Y * (1.0 - Y);
    const double dqx = (1.0 - 2.0 * X) / wx, dqy = (1.0 - 2.0 * Y) / wy;
    const double B = qx * qx * qy * qy;
    const double Bx = 2.0 * qx * dqx * qy * qy;
    const double By = 2.0 * qy * dqy * qx * qx;
    double S = 0.0, Sx = 0.0, Sy = 0.0;
    for (const auto& m : ms) {
      const double sx = std::sin(m.alpha * x + m.phi), cx = std::cos(m.alpha * x + m.phi);
      const double sy = std::sin(m.beta * y + m.chi), cy = std::cos(m.beta * y + m.chi);
      S += m.a * sx * sy;
      Sx += m.a * m.alpha * cx * sy;
      Sy += m.a * m.beta * sx * cy;
    }
    // u = (d psi / dy, -d psi / dx)
    return {scale * (By * S + B * Sy), -scale * (Bx * S + B * Sx)};
  };
}

std::vector<Vector> stokes_solutions(std::shared_ptr<const TaylorHoodSpace> space,
                                     const std::vector<double>& nu,
                                     const std::vector<VectorField>& forcing,
                                     const std::vector<VectorField>& dirichlet, double t) {
  const OperatorSet ops = assemble_core(*space);
  const int n2 = space->num_p2();
  std::vector<Vector> out;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    const SparseMatrix A = nu[j] * ops.K;
    const SaddleSystem sys = SaddleSystem::for_space(*space, ops, A);
    const Factorization lu = factorize(sys);
    Vector load = Vector::Zero(space->num_velocity());
    if (j < forcing.size() && forcing[j]) load = rhs_forcing(*space, forcing[j], t);
    Vector g = Vector::Zero(space->num_velocity());
    if (j < dirichlet.size() && dirichlet[j]) {
      for (int i : space->dirichlet_nodes()) {
        const Point& x = space->node(i);
        const Point v = dirichlet[j](x[0], x[1], t);
        g[i] = v[0];
        g[i + n2] = v[1];
      }
    }
    out.push_back(lu.solve(sys.rhs(load, g)).head(space->num_velocity()));
  }
  return out;
}

namespace {

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }

double pressure_at(const std::shared_ptr<const TaylorHoodSpace>& sp, const Vector& p,
                   const Point& x) {
  const auto loc = locate(sp->mesh(), x, 1e-10);
  if (!loc) {
    throw std::invalid_argument("probe point (" + std::to_string(x[0]) + ", " +
                                std::to_string(x[1]) + ") lies outside the mesh");
  }
  const FEFunction pf{sp, FieldKind::kPressure, p};
  return pf.pressure(loc->triangle, loc->bary);
}

}  // namespace

Forces drag_lift_dp(std::shared_ptr<const TaylorHoodSpace> sp, const Vector& u, const Vector& u_t,
                    const Vector& p, double nu, const ForceOptions& opt) {
  const TaylorHoodSpace& space = *sp;
  const Mesh& mesh = space.mesh();
  std::vector<char> on_surface(space.num_p2(), 0);
  for (int e = 0; e < static_cast<int>(mesh.boundary_edges().size()); ++e) {
    if (mesh.boundary_edges()[e].tag != opt.surface) continue;
    for (int d : space.boundary_edge_dofs(e)) on_surface[d] = 1;
  }
  const FEFunction uf{sp, FieldKind::kVelocity, u};
  const FEFunction utf{sp, FieldKind::kVelocity, u_t};
  const FEFunction pf{sp, FieldKind::kPressure, p};
  const auto& rule = triangle_rule_deg5();
  double res[2] = {0.0, 0.0};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto dofs = space.element_dofs(t);
    bool touches = false;
    for (int d : dofs) touches = touches || on_surface[d];
    if (!touches) continue;
    const auto g = ElementGeometry::of(mesh, t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto b = P2Basis::at(g, rule.barycentric[q]);
      const double w = rule.weights[q] * g.area;
      const Point uv = uf.value(t, b);
      const Point ut = utf.value(t, b);
      const auto gu = uf.gradient(t, b);
      const double pv = pf.pressure(t, rule.barycentric[q]);
      const Point adv{dot(uv, gu[0]), dot(uv, gu[1])};
      // v = chi e_c with chi = sum of surface basis functions.
      double chi = 0.0;
      Point gchi{0.0, 0.0};
      for (int i = 0; i < 6; ++i) {
        if (!on_surface[dofs[i]]) continue;
        chi += b.value[i];
        gchi[0] += b.grad[i][0];
        gchi[1] += b.grad[i][1];
      }
      for (int c = 0; c < 2; ++c) {
        res[c] += w * ((ut[c] + adv[c]) * chi + nu * dot(gu[c], gchi) - pv * gchi[c]);
      }
    }
  }
  Forces f;
  f.drag = -opt.scale * res[0];
  f.lift = -opt.scale * res[1];
  f.pressure_drop = pressure_at(sp, p, opt.front) - pressure_at(sp, p, opt.back);
  return f;
}

Forces drag_lift_boundary(std::shared_ptr<const TaylorHoodSpace> sp, const Vector& u, const Vector& p,
                          double nu, const ForceOptions& opt) {
  const TaylorHoodSpace& space = *sp;
  const Mesh& mesh = space.mesh();
  const FEFunction uf{sp, FieldKind::kVelocity, u};
  const FEFunction pf{sp, FieldKind::kPressure, p};
  double force[2] = {0.0, 0.0};
  for (int e = 0; e < static_cast<int>(mesh.boundary_edges().size()); ++e) {
    const auto& be = mesh.boundary_edges()[e];
    if (be.tag != opt.surface) continue;
    const int t = be.triangle;
    const auto& tri = mesh.triangles()[t];
    int la = -1, lb = -1;
    for (int k = 0; k < 3; ++k) {
      if (tri[k] == be.vertices[0]) la = k;
      if (tri[k] == be.vertices[1]) lb = k;
    }
    const auto g = ElementGeometry::of(mesh, t);
    const Point n = mesh.outward_normal(e);
    const double len = mesh.boundary_edge_length(e);
    for (std::size_t q = 0; q < gauss4().points.size(); ++q) {
      const double s = gauss4().points[q];
      std::array<double, 3> bary{0.0, 0.0, 0.0};
      bary[la] = 1.0 - s;
      bary[lb] = s;
      const auto b = P2Basis::at(g, bary);
      const auto gu = uf.gradient(t, b);
      const double pv = pf.pressure(t, bary);
      const double w = gauss4().weights[q] * len;
      // Traction on the body uses the normal pointing into the fluid (-n).
      for (int c = 0; c < 2; ++c) force[c] -= w * (nu * dot(gu[c], n) - pv * n[c]);
    }
  }
  Forces f;
  f.drag = opt.scale * force[0];
  f.lift = opt.scale * force[1];
  f.pressure_drop = pressure_at(sp, p, opt.front) - pressure_at(sp, p, opt.back);
  return f;
}

}  // namespace ensflow
