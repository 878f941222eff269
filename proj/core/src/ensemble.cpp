#include "ensflow/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

namespace ensflow {
namespace {

bool uses_b2(Algorithm a) {
  return a == Algorithm::kA2 || a == Algorithm::kA3 || a == Algorithm::kA5 ||
         a == Algorithm::kA6;
}

bool uses_b3(Algorithm a) { return a == Algorithm::kA3 || a == Algorithm::kA6; }

bool uses_L(Algorithm a) { return a == Algorithm::kA2 || a == Algorithm::kA5; }

/// Runs body(j) for j in [0, n), split over up to `threads` workers.
template <class F>
void for_members(int n, int threads, F&& body) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int j = 0; j < n; ++j) body(j);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int j = w; j < n; j += workers) body(j);
    });
  }
  for (auto& t : pool) t.join();
}

double quad(const SparseMatrix& A, const Vector& u) { return u.dot(A * u); }

}  // namespace

double EnsembleConfig::nu_inf() const { return *std::max_element(nu.begin(), nu.end()); }

double EnsembleConfig::nu_mean() const {
  return std::accumulate(nu.begin(), nu.end(), 0.0) / nu.size();
}

double EnsembleConfig::sigma() const {
  return is_second_order(algorithm) ? compute_sigma(gamma, nu) : 0.0;
}

void EnsembleConfig::validate() const {
  if (nu.empty()) throw EnsembleError("ensemble needs at least one member");
  for (double v : nu) {
    if (!(v > 0.0)) throw EnsembleError("viscosities must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 2.0)) throw EnsembleError("gamma must lie in [0, 2)");
  if (!(L >= 0.0)) throw EnsembleError("L must be non-negative");
  if (!(dt0 > 0.0)) throw EnsembleError("dt0 must be positive");
  if (!(T_final > 0.0)) throw EnsembleError("T_final must be positive");
  if (!(C > 0.0)) throw EnsembleError("inverse-inequality constant C must be positive");
  if (!(cfl.safety > 0.0)) throw EnsembleError("CFL safety factor must be positive");
  if (!(cfl.dt_floor > 0.0)) throw EnsembleError("dt floor must be positive");
  theta.validate();
  if (is_second_order(algorithm) && require_guarantee) {
    for (double v : nu) {
      if (!(nu_inf() + (gamma - 1.0) * v > 0.0)) {
        throw EnsembleError("nu_inf + (gamma - 1) nu_j must be positive for every member");
      }
    }
    const double s = sigma();
    if (!(s > 0.5 && s < 1.0)) {
      throw EnsembleError("sigma = " + std::to_string(s) +
                          " is outside (1/2, 1); stability is not guaranteed");
    }
  }
}

EnsembleSolver::EnsembleSolver(std::shared_ptr<const TaylorHoodSpace> space,
                               EnsembleConfig config, EnsembleData data)
    : space_(std::move(space)),
      config_(std::move(config)),
      data_(std::move(data)),
      ops_(assemble_core(*space_)),
      convection_(space_) {
  config_.validate();
  const int J = config_.J();
  if (!data_.forcing.empty() && static_cast<int>(data_.forcing.size()) != J) {
    throw EnsembleError("forcing list must have one entry per member");
  }
  if (!data_.dirichlet.empty() && static_cast<int>(data_.dirichlet.size()) != J) {
    throw EnsembleError("Dirichlet data list must have one entry per member");
  }
  const auto metrics = mesh_metrics(space_->mesh());
  diam_ = metrics.diam;
  h_ = metrics.h;
  lambda1_ = config_.lambda1;
  const Algorithm a = config_.algorithm;
  if (space_->has_open_boundary() && (a == Algorithm::kA2 || a == Algorithm::kA5) &&
      !lambda1_) {
    lambda1_ = mixed_eigenvalue(*space_, ops_).lambda;
  }
}

FEFunction EnsembleSolver::wrap(const Vector& v) const {
  return FEFunction{space_, FieldKind::kVelocity, v};
}

Vector EnsembleSolver::dirichlet_values(int j, double t) const {
  const int n2 = space_->num_p2();
  Vector g = Vector::Zero(2 * n2);
  if (data_.dirichlet.empty() || !data_.dirichlet[j]) return g;
  for (int i : space_->dirichlet_nodes()) {
    const Point& x = space_->node(i);
    const Point v = data_.dirichlet[j](x[0], x[1], t);
    g[i] = v[0];
    g[i + n2] = v[1];
  }
  return g;
}

Vector EnsembleSolver::forcing(int j, double t) const {
  if (data_.forcing.empty() || !data_.forcing[j]) {
    return Vector::Zero(space_->num_velocity());
  }
  return rhs_forcing(*space_, data_.forcing[j], t);
}

EnsembleState EnsembleSolver::initial_state(const std::vector<VectorField>& u0, double t0,
                                            const std::vector<VectorField>* previous) const {
  const int J = config_.J();
  if (static_cast<int>(u0.size()) != J) {
    throw EnsembleError("initial data must have one field per member");
  }
  EnsembleState s;
  s.t = t0;
  s.dt = config_.dt0;
  for (int j = 0; j < J; ++j) {
    s.u.push_back(interpolate(space_, u0[j], t0).coeffs);
    s.p.push_back(Vector::Zero(space_->num_pressure()));
  }
  if (previous != nullptr && is_second_order(config_.algorithm)) {
    if (static_cast<int>(previous->size()) != J) {
      throw EnsembleError("previous-level data must have one field per member");
    }
    for (int j = 0; j < J; ++j) {
      s.u_prev.push_back(interpolate(space_, (*previous)[j], t0 - config_.dt0).coeffs);
    }
    s.has_history = true;
  } else {
    s.u_prev = s.u;
  }
  return s;
}

Algorithm EnsembleSolver::next_scheme(const EnsembleState& s) const {
  const Algorithm a = config_.algorithm;
  return is_second_order(a) && !s.has_history ? first_order_partner(a) : a;
}

std::vector<Vector> EnsembleSolver::explicit_fields(const EnsembleState& s) const {
  if (!is_second_order(next_scheme(s))) return s.u;
  std::vector<Vector> e(s.u.size());
  for (std::size_t j = 0; j < s.u.size(); ++j) e[j] = 2.0 * s.u[j] - s.u_prev[j];
  return e;
}

std::vector<std::vector<Margin>> EnsembleSolver::cfl_margins(const EnsembleState& s,
                                                             double dt) const {
  const Algorithm scheme = next_scheme(s);
  const auto w = explicit_fields(s);
  const int J = config_.J();
  Vector mean = Vector::Zero(space_->num_velocity());
  for (const auto& v : w) mean += v;
  mean /= J;
  MarginInputs in;
  in.dt = dt;
  in.diam = diam_;
  in.h = h_;
  in.lambda1 = lambda1_;
  in.gamma = config_.gamma;
  in.sigma = config_.sigma();
  in.C = config_.C;
  std::vector<std::vector<Margin>> out(J);
  for_members(J, config_.threads, [&](int j) {
    const Vector fl = w[j] - mean;
    const auto inf = inf_norms(wrap(fl), config_.theta);
    FluctuationNorms norms;
    norms.value_inf = inf.value_inf;
    norms.divergence_inf = inf.divergence_inf;
    norms.boundary_theta_inf = inf.boundary_normal_theta_inf;
    norms.grad_l2 = std::sqrt(std::max(0.0, quad(ops_.K, fl)));
    MarginInputs local = in;
    local.nu_j = config_.nu[j];
    out[j] = ensflow::cfl_margins(scheme, norms, local);
  });
  return out;
}

double EnsembleSolver::energy(const EnsembleState& s, int j) const {
  const Algorithm a = config_.algorithm;
  const bool open = space_->has_open_boundary();
  const double dt = s.dt;
  const double nu_j = config_.nu[j];
  if (is_second_order(a) && s.has_history) {
    const Vector& u1 = s.u[j];
    const Vector& u0 = s.u_prev[j];
    const Vector e1 = 2.0 * u1 - u0;
    const Vector d = u1 - u0;
    const double g = config_.gamma;
    const double nu_tilde = config_.nu_inf() + (g - 1.0) * nu_j;
    double en = (quad(ops_.M, u1) + quad(ops_.M, e1)) / 4.0 + g * quad(ops_.M, d) / 2.0 +
                dt * nu_tilde / 2.0 * quad(ops_.K, d) +
                dt * config_.sigma() * nu_j * quad(ops_.K, u1);
    if (a == Algorithm::kA5 && open) {
      en += config_.L * (quad(ops_.M_gamma, u1) + quad(ops_.M_gamma, e1)) / 4.0 +
            config_.L * g * quad(ops_.M_gamma, d) / 2.0;
    }
    return en;
  }
  const Algorithm f = first_order_partner(a);
  const double nu_imp = f == Algorithm::kBaseline ? config_.nu_mean() : config_.nu_inf();
  const Vector& u = s.u[j];
  double en = quad(ops_.M, u) / 2.0 + dt * nu_imp / 2.0 * quad(ops_.K, u);
  if (f == Algorithm::kA2 && open) en += config_.L * quad(ops_.M_gamma, u) / 2.0;
  return en;
}

StepReport EnsembleSolver::step(EnsembleState& s) const {
  return step_with(s, cfl_margins(s, s.dt));
}

StepReport EnsembleSolver::step_with(EnsembleState& s,
                                     const std::vector<std::vector<Margin>>& margins) const {
  const int J = config_.J();
  const Algorithm scheme = next_scheme(s);
  const bool second = is_second_order(scheme);
  const bool open = space_->has_open_boundary();
  const bool b2 = open && uses_b2(scheme);
  const bool with_L = open && uses_L(scheme) && config_.L > 0.0;
  const double dt = s.dt;
  const double t_next = s.t + dt;
  const double a = second ? 1.5 / dt : 1.0 / dt;
  const double nu_imp = scheme == Algorithm::kBaseline ? config_.nu_mean() : config_.nu_inf();
  const double gamma = second ? config_.gamma : 0.0;

  const auto counters0 = solver_counters();

  const auto w = explicit_fields(s);
  Vector mean = Vector::Zero(space_->num_velocity());
  for (const auto& v : w) mean += v;
  mean /= J;
  const FEFunction mean_f = wrap(mean);

  SparseMatrix N_mean = convection_.b1(mean_f);
  if (b2) N_mean += convection_.b2(mean_f, config_.theta);
  SparseMatrix A = a * ops_.M + nu_imp * ops_.K + (1.0 + gamma) * N_mean;
  if (with_L) A += (config_.L * a) * ops_.M_gamma;
  A.makeCompressed();
  const SaddleSystem system = SaddleSystem::for_space(*space_, ops_, A);
  const Factorization lu = factorize(system);

  Eigen::MatrixXd rhs(system.size(), J);
  std::vector<Vector> fluct(J);
  for_members(J, config_.threads, [&](int j) {
    const double nu_j = config_.nu[j];
    fluct[j] = w[j] - mean;
    const FEFunction fl = wrap(fluct[j]);
    const Vector hist = second ? Vector((4.0 * s.u[j] - s.u_prev[j]) / (2.0 * dt))
                               : Vector(s.u[j] / dt);
    Vector r = ops_.M * hist;
    if (with_L) r += config_.L * (ops_.M_gamma * hist);
    if (gamma != 0.0) r += gamma * (N_mean * w[j]);
    SparseMatrix N_fl = uses_b3(scheme) ? convection_.b3(fl) : convection_.b1(fl);
    if (b2 && !uses_b3(scheme)) N_fl += convection_.b2(fl, config_.theta);
    r -= N_fl * w[j];
    r += (nu_imp - nu_j) * (ops_.K * w[j]);
    r += forcing(j, t_next);
    rhs.col(j) = system.rhs(r, dirichlet_values(j, t_next));
  });

  const Eigen::MatrixXd sol = solve_multi(lu, system, rhs);

  StepReport report;
  report.step = s.step + 1;
  report.t = t_next;
  report.dt = dt;
  report.scheme = scheme;
  report.conditions = active_conditions(scheme);
  report.matrix_fingerprint = lu.fingerprint();
  report.members.resize(J);

  const int nu = space_->num_velocity();
  const int np = space_->num_pressure();
  for (int j = 0; j < J; ++j) {
    Vector u_new = sol.col(j).head(nu);
    auto& m = report.members[j];
    for (const auto& mg : margins[j]) m.margins.push_back(mg.value);
    if (open) {
      m.boundary_norm_sq = quad(ops_.M_gamma, s.u[j]);
      const Vector v = second ? Vector((1.0 + gamma) * u_new - gamma * w[j]) : u_new;
      m.flux = theta1_boundary_flux(mean_f, wrap(v), config_.theta) +
               theta1_boundary_flux(wrap(fluct[j]), wrap(w[j]), config_.theta);
    }
    s.u_prev[j] = std::move(s.u[j]);
    s.u[j] = std::move(u_new);
    s.p[j] = sol.col(j).segment(nu, np);
  }
  s.has_history = true;
  s.t = t_next;
  s.step += 1;
  for (int j = 0; j < J; ++j) report.members[j].energy = energy(s, j);

  const auto counters1 = solver_counters();
  report.factorizations = counters1.factorizations - counters0.factorizations;
  report.solves = counters1.solves - counters0.solves;
  return report;
}

RunResult EnsembleSolver::run(EnsembleState& s, const StepObserver& observer) const {
  const int J = config_.J();
  RunResult result;
  for (int j = 0; j < J; ++j) result.initial_energy.push_back(energy(s, j));

  const Algorithm target = config_.algorithm;
  const bool ledger_on = space_->has_open_boundary() && uses_L(target) && config_.L > 0.0 &&
                         data_.forcing.empty();
  const double ledger_factor = target == Algorithm::kA5 ? 5.0 : 1.0;
  std::vector<double> ledger_e0, sum_flux(J, 0.0), sum_bnd(J, 0.0);
  bool ledger_started = false;

  const double T = config_.T_final;
  while (s.t < T - 1e-9 * s.dt) {
    auto margins = cfl_margins(s, s.dt);
    if (config_.cfl.halve_on_violation) {
      int worst_j = -1;
      Margin worst{Condition::kStab, 0.0};
      for (int j = 0; j < J; ++j) {
        for (const auto& m : margins[j]) {
          if (!(m.value * config_.cfl.safety <= 1.0) && (worst_j < 0 || m.value > worst.value)) {
            worst = m;
            worst_j = j;
          }
        }
      }
      if (worst_j >= 0) {
        const double old_dt = s.dt;
        s.dt = 0.5 * old_dt;
        result.halvings.push_back({s.t, old_dt, s.dt, worst_j, worst.condition, worst.value});
        if (s.dt < config_.cfl.dt_floor) {
          throw EnsembleError("time step fell below " + std::to_string(config_.cfl.dt_floor) +
                              " at t = " + std::to_string(s.t) + " (" +
                              condition_name(worst.condition) + " margin " +
                              std::to_string(worst.value) + " for member " +
                              std::to_string(worst_j) + ")");
        }
        if (is_second_order(target) && s.has_history) {
          // Keep the BDF2 history equispaced: u^{n-1} moves to t^n - dt/2.
          for (int j = 0; j < J; ++j) s.u_prev[j] = 0.5 * (s.u[j] + s.u_prev[j]);
        }
        continue;
      }
    }
    const Algorithm scheme = next_scheme(s);
    if (ledger_on && !ledger_started && scheme == target) {
      for (int j = 0; j < J; ++j) ledger_e0.push_back(energy(s, j));
      ledger_started = true;
    }
    StepReport report = step_with(s, margins);
    if (ledger_started) {
      for (int j = 0; j < J; ++j) {
        sum_flux[j] += report.dt * report.members[j].flux;
        sum_bnd[j] += report.dt * report.members[j].boundary_norm_sq;
      }
    }
    if (observer) observer(s, report);
    result.steps.push_back(std::move(report));
  }

  if (ledger_started) {
    LedgerCheck ledger;
    for (int j = 0; j < J; ++j) {
      const double lhs = energy(s, j) + sum_flux[j];
      const double rhs =
          ledger_e0[j] + ledger_factor * config_.nu[j] / config_.L * sum_bnd[j];
      ledger.lhs.push_back(lhs);
      ledger.rhs.push_back(rhs);
      if (!(lhs <= rhs + 1e-10 * std::max(1.0, std::abs(rhs)))) ledger.holds = false;
    }
    result.ledger = std::move(ledger);
  }
  return result;
}

void write_step_csv_header(std::ostream& os, const std::vector<Condition>& conditions) {
  os << "step,t,dt,scheme,member,energy";
  for (Condition c : conditions) os << ',' << condition_name(c);
  os << ",flux\n";
}

void write_step_csv(std::ostream& os, const StepReport& r) {
  for (std::size_t j = 0; j < r.members.size(); ++j) {
    const auto& m = r.members[j];
    os << r.step << ',' << r.t << ',' << r.dt << ',' << algorithm_name(r.scheme) << ',' << j
       << ',' << m.energy;
    for (double v : m.margins) os << ',' << v;
    os << ',' << m.flux << '\n';
  }
}

void write_halving_csv(std::ostream& os, const std::vector<HalvingEvent>& events) {
  os << "t,old_dt,new_dt,member,condition,margin\n";
  for (const auto& e : events) {
    os << e.t << ',' << e.old_dt << ',' << e.new_dt << ',' << e.member << ','
       << condition_name(e.condition) << ',' << e.margin << '\n';
  }
}

}  // namespace ensflow
