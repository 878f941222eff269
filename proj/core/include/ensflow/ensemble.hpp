#ifndef ENSFLOW_ENSEMBLE_HPP
#define ENSFLOW_ENSEMBLE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ensflow/assembly.hpp"
#include "ensflow/linsolve.hpp"

namespace ensflow {

enum class Algorithm { kA1, kA2, kA3, kA4, kA5, kA6, kBaseline };

Algorithm parse_algorithm(std::string_view name);
const char* algorithm_name(Algorithm a);
bool is_second_order(Algorithm a);
/// First-order scheme used for the BDF2 startup step.
Algorithm first_order_partner(Algorithm a);

enum class Condition {
  kStab,       // StabCondition
  kObc1,
  kObc2,
  kObc3,
  kStab2nd,    // StabCondition_2nd
  kObc1_2nd,
  kObc2_2nd,
  kObc3_2nd,
};

const char* condition_name(Condition c);
std::vector<Condition> active_conditions(Algorithm a);

class EnsembleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Stability parameters

/// g_gamma(x) = (x + gamma - 1)^2 / (4 gamma (x - 1) + 2 (gamma - 1) + 2 x).
/// At the removable point x = 1, gamma = 0 the limit 0 is returned.
double stability_g(double gamma, double x);

/// sigma = max_j g_gamma(nu_inf / nu_j).
double compute_sigma(double gamma, const std::vector<double>& nu);

struct GammaChoice {
  double gamma = 0.0;
  double sigma = 0.0;
  bool guaranteed = false;  // sigma < 1
  bool above_half = false;  // sigma > 1/2
};

/// Minimizes sigma over gamma in (0, 2): grid step 1e-3, then golden-section
/// refinement around the best grid point.
GammaChoice select_gamma(const std::vector<double>& nu);

struct BaselineRestriction {
  bool feasible = false;
  double mu = 0.0;         // required bound, (max_j |nu_j - mean| / mean)^2
  double max_ratio = 0.0;
};

BaselineRestriction check_baseline_restriction(const std::vector<double>& nu);

// ---------------------------------------------------------------------------
// Time-step conditions

/// Norms of one member's fluctuation (u' or E').
struct FluctuationNorms {
  double value_inf = 0.0;
  double divergence_inf = 0.0;
  double boundary_theta_inf = 0.0;  // |(w.n) Theta0(w.n)| on Gamma_N
  double grad_l2 = 0.0;
};

struct MarginInputs {
  double dt = 0.0;
  double nu_j = 1.0;
  double diam = 0.0;
  int dim = 2;
  double h = 0.0;
  std::optional<double> lambda1;
  double gamma = 0.0;
  double sigma = 0.0;
  double C = 1.0;
};

struct Margin {
  Condition condition;
  double value;
};

/// Left-hand sides of the active conditions (<= 1 means satisfied).
std::vector<Margin> cfl_margins(Algorithm a, const FluctuationNorms& w,
                                const MarginInputs& in);

// ---------------------------------------------------------------------------
// Configuration and state

struct CflPolicy {
  bool halve_on_violation = true;
  double safety = 1.0;
  double dt_floor = 1e-8;
};

struct EnsembleConfig {
  std::vector<double> nu;
  Algorithm algorithm = Algorithm::kA1;
  double gamma = 0.0;
  double L = 0.0;
  ThetaParams theta;
  double dt0 = 0.01;
  double T_final = 1.0;
  CflPolicy cfl;
  double C = 1.0;
  std::optional<double> lambda1;
  /// Enforce sigma in (1/2, 1) and nu_tilde_j > 0 (second-order schemes).
  bool require_guarantee = false;
  int threads = 1;

  int J() const { return static_cast<int>(nu.size()); }
  double nu_inf() const;
  double nu_mean() const;
  /// sigma for second-order schemes, 0 otherwise.
  double sigma() const;
  void validate() const;
};

/// Per-member data. Empty std::function entries mean zero.
struct EnsembleData {
  std::vector<VectorField> forcing;
  std::vector<VectorField> dirichlet;
};

struct EnsembleState {
  std::vector<Vector> u;       // u^n
  std::vector<Vector> u_prev;  // u^{n-1}, valid when has_history
  std::vector<Vector> p;       // p^n
  bool has_history = false;
  double t = 0.0;
  double dt = 0.0;
  int step = 0;
};

struct MemberReport {
  double energy = 0.0;
  std::vector<double> margins;
  double flux = 0.0;              // F_{n+1}
  double boundary_norm_sq = 0.0;  // ||u^n||^2 on Gamma_N, for the ledger
};

struct StepReport {
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  Algorithm scheme = Algorithm::kA1;  // scheme actually used for this step
  std::vector<Condition> conditions;
  std::vector<MemberReport> members;
  std::uint64_t factorizations = 0;  // during this step
  std::uint64_t solves = 0;
  std::uint64_t matrix_fingerprint = 0;
};

struct HalvingEvent {
  double t = 0.0;
  double old_dt = 0.0;
  double new_dt = 0.0;
  int member = 0;
  Condition condition = Condition::kStab;
  double margin = 0.0;
};

/// Ener^N + dt sum F <= Ener^0 + c (nu_j / L) dt sum ||u^n||^2_{Gamma_N}.
struct LedgerCheck {
  std::vector<double> lhs;
  std::vector<double> rhs;
  bool holds = true;
};

struct RunResult {
  std::vector<StepReport> steps;
  std::vector<HalvingEvent> halvings;
  std::vector<double> initial_energy;
  std::optional<LedgerCheck> ledger;
};

using StepObserver = std::function<void(const EnsembleState&, const StepReport&)>;

class EnsembleSolver {
 public:
  EnsembleSolver(std::shared_ptr<const TaylorHoodSpace> space, EnsembleConfig config,
                 EnsembleData data = {});

  const TaylorHoodSpace& space() const { return *space_; }
  std::shared_ptr<const TaylorHoodSpace> space_ptr() const { return space_; }
  const OperatorSet& operators() const { return ops_; }
  const EnsembleConfig& config() const { return config_; }
  std::optional<double> lambda1() const { return lambda1_; }

  /// Interpolated initial state at t0. `previous` (closed forms at t0 - dt0)
  /// gives second-order schemes their u^{-1}; without it the first step is a
  /// backward-Euler step of the matching first-order scheme.
  EnsembleState initial_state(const std::vector<VectorField>& u0, double t0 = 0.0,
                              const std::vector<VectorField>* previous = nullptr) const;

  /// Explicit fields for the next step: u^n, or E^n for BDF2.
  std::vector<Vector> explicit_fields(const EnsembleState& s) const;
  Algorithm next_scheme(const EnsembleState& s) const;

  /// Margins of every member before stepping with `dt`.
  std::vector<std::vector<Margin>> cfl_margins(const EnsembleState& s, double dt) const;

  /// One step with the state's dt. Exactly one factorization and J solves.
  StepReport step(EnsembleState& s) const;

  double energy(const EnsembleState& s, int j) const;

  /// Full run to T_final with the halving policy.
  RunResult run(EnsembleState& s, const StepObserver& observer = {}) const;

 private:
  StepReport step_with(EnsembleState& s, const std::vector<std::vector<Margin>>& margins) const;
  Vector dirichlet_values(int j, double t) const;
  Vector forcing(int j, double t) const;
  FEFunction wrap(const Vector& v) const;

  std::shared_ptr<const TaylorHoodSpace> space_;
  EnsembleConfig config_;
  EnsembleData data_;
  OperatorSet ops_;
  ConvectionAssembler convection_;
  std::optional<double> lambda1_;
  double diam_ = 0.0;
  double h_ = 0.0;
};

// ---------------------------------------------------------------------------
// Output

void write_step_csv_header(std::ostream& os, const std::vector<Condition>& conditions);
void write_step_csv(std::ostream& os, const StepReport& report);
void write_halving_csv(std::ostream& os, const std::vector<HalvingEvent>& events);

}  // namespace ensflow

#endif  // ENSFLOW_ENSEMBLE_HPP
