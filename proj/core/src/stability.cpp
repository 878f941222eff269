#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ensflow/ensemble.hpp"

namespace ensflow {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "A1") return Algorithm::kA1;
  if (name == "A2") return Algorithm::kA2;
  if (name == "A3") return Algorithm::kA3;
  if (name == "A4") return Algorithm::kA4;
  if (name == "A5") return Algorithm::kA5;
  if (name == "A6") return Algorithm::kA6;
  if (name == "BASELINE" || name == "baseline") return Algorithm::kBaseline;
  throw EnsembleError("unknown algorithm '" + std::string(name) +
                      "' (expected A1..A6 or BASELINE)");
}

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kA1: return "A1";
    case Algorithm::kA2: return "A2";
    case Algorithm::kA3: return "A3";
    case Algorithm::kA4: return "A4";
    case Algorithm::kA5: return "A5";
    case Algorithm::kA6: return "A6";
    case Algorithm::kBaseline: return "BASELINE";
  }
  return "?";
}

bool is_second_order(Algorithm a) {
  return a == Algorithm::kA4 || a == Algorithm::kA5 || a == Algorithm::kA6;
}

Algorithm first_order_partner(Algorithm a) {
  switch (a) {
    case Algorithm::kA4: return Algorithm::kA1;
    case Algorithm::kA5: return Algorithm::kA2;
    case Algorithm::kA6: return Algorithm::kA3;
    default: return a;
  }
}

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::kStab: return "StabCondition";
    case Condition::kObc1: return "OBC1";
    case Condition::kObc2: return "OBC2";
    case Condition::kObc3: return "OBC3";
    case Condition::kStab2nd: return "StabCondition_2nd";
    case Condition::kObc1_2nd: return "OBC1_2nd";
    case Condition::kObc2_2nd: return "OBC2_2nd";
    case Condition::kObc3_2nd: return "OBC3_2nd";
  }
  return "?";
}

std::vector<Condition> active_conditions(Algorithm a) {
  switch (a) {
    case Algorithm::kA1:
    case Algorithm::kBaseline: return {Condition::kStab};
    case Algorithm::kA2: return {Condition::kObc1, Condition::kObc2};
    case Algorithm::kA3: return {Condition::kObc3};
    case Algorithm::kA4: return {Condition::kStab2nd};
    case Algorithm::kA5: return {Condition::kObc1_2nd, Condition::kObc2_2nd};
    case Algorithm::kA6: return {Condition::kObc3_2nd};
  }
  return {};
}

double stability_g(double gamma, double x) {
  const double num = (x + gamma - 1.0) * (x + gamma - 1.0);
  const double den = 4.0 * gamma * (x - 1.0) + 2.0 * (gamma - 1.0) + 2.0 * x;
  if (x == 1.0 && gamma == 0.0) return 0.0;
  if (!(den > 0.0)) {
    throw EnsembleError("stability function denominator is not positive (gamma=" +
                        std::to_string(gamma) + ", x=" + std::to_string(x) + ")");
  }
  return num / den;
}

double compute_sigma(double gamma, const std::vector<double>& nu) {
  if (nu.empty()) throw EnsembleError("viscosity list is empty");
  const double nu_inf = *std::max_element(nu.begin(), nu.end());
  double sigma = 0.0;
  for (double v : nu) sigma = std::max(sigma, stability_g(gamma, nu_inf / v));
  return sigma;
}

GammaChoice select_gamma(const std::vector<double>& nu) {
  if (nu.empty()) throw EnsembleError("viscosity list is empty");
  // gamma = 0 makes nu_tilde vanish for the member with nu_j = nu_inf.
  const double step = 1e-3;
  double best_gamma = step;
  double best = compute_sigma(step, nu);
  for (int k = 2; k < 2000; ++k) {
    const double g = k * step;
    const double s = compute_sigma(g, nu);
    if (s < best) {
      best = s;
      best_gamma = g;
    }
  }
  double a = std::max(best_gamma - step, 0.5 * step);
  double b = std::min(best_gamma + step, 2.0 - 1e-12);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = compute_sigma(c, nu);
  double fd = compute_sigma(d, nu);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = compute_sigma(c, nu);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = compute_sigma(d, nu);
    }
  }
  const double g = 0.5 * (a + b);
  const double s = compute_sigma(g, nu);
  GammaChoice out;
  if (s < best) {
    out.gamma = g;
    out.sigma = s;
  } else {
    out.gamma = best_gamma;
    out.sigma = best;
  }
  out.guaranteed = out.sigma < 1.0;
  out.above_half = out.sigma > 0.5;
  return out;
}

BaselineRestriction check_baseline_restriction(const std::vector<double>& nu) {
  if (nu.empty()) throw EnsembleError("viscosity list is empty");
  const double mean = std::accumulate(nu.begin(), nu.end(), 0.0) / nu.size();
  BaselineRestriction r;
  for (double v : nu) r.max_ratio = std::max(r.max_ratio, std::abs(v - mean) / mean);
  r.mu = r.max_ratio * r.max_ratio;
  r.feasible = r.max_ratio < 1.0;
  return r;
}

namespace {

/// prefactor * norm_sq, with 0 * inf treated as 0.
double scaled(double prefactor, double norm_sq) {
  if (norm_sq == 0.0) return 0.0;
  return prefactor * norm_sq;
}

double second_order_factor(double gamma, double sigma) {
  if (sigma >= 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 + gamma) * (1.0 + gamma) / ((1.0 + 4.0 * gamma) * (1.0 - sigma));
}

}  // namespace

std::vector<Margin> cfl_margins(Algorithm a, const FluctuationNorms& w,
                                const MarginInputs& in) {
  auto poincare = [&]() {
    if (!in.lambda1 || !(*in.lambda1 > 0.0)) {
      throw EnsembleError("open-boundary time-step condition needs lambda_1 > 0");
    }
    return 1.0 / std::sqrt(*in.lambda1);
  };
  auto sq = [](double x) { return x * x; };
  const double g = in.gamma;
  std::vector<Margin> out;
  for (Condition c : active_conditions(a)) {
    double v = 0.0;
    switch (c) {
      case Condition::kStab:
        v = in.dt / in.nu_j * sq(w.value_inf + in.diam / in.dim * w.divergence_inf);
        break;
      case Condition::kObc1:
        v = in.dt / in.nu_j * sq(w.value_inf + poincare() * w.divergence_inf);
        break;
      case Condition::kObc2:
        v = in.dt / (8.0 * in.nu_j) * sq(w.boundary_theta_inf);
        break;
      case Condition::kObc3:
        v = in.C * in.dt / (in.h * in.nu_j) * sq(w.grad_l2);
        break;
      case Condition::kStab2nd:
        v = scaled(second_order_factor(g, in.sigma) * in.dt / in.nu_j,
                   sq(w.value_inf + in.diam / in.dim * w.divergence_inf));
        break;
      case Condition::kObc1_2nd:
        v = scaled(second_order_factor(g, in.sigma) * in.dt / in.nu_j,
                   sq(w.value_inf + poincare() * w.divergence_inf));
        break;
      case Condition::kObc2_2nd:
        v = in.dt * sq(g + 1.0) / ((4.0 * g + 1.0) * in.nu_j) * sq(w.boundary_theta_inf);
        break;
      case Condition::kObc3_2nd: {
        const double pre = in.sigma >= 1.0 ? std::numeric_limits<double>::infinity()
                                           : in.C * sq(g + 1.0) / (1.0 + 4.0 * g) * in.dt /
                                                 (in.h * (1.0 - in.sigma) * in.nu_j);
        v = scaled(pre, sq(w.grad_l2));
        break;
      }
    }
    out.push_back({c, v});
  }
  return out;
}

}  // namespace ensflow
