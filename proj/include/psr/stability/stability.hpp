#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "psr/model/observer_predictor.hpp"

namespace psr::stability {

using model::ObserverParams;
using nn::Mat;

/// Contraction data for an observer: rho = ||A - K C_y||_2 + L_g.
struct StabilityReport {
  double rho = 0.0;
  double a_c_norm = 0.0;     // ||A - K C_y||_2
  double lipschitz_g = 0.0;  // product of the weight spectral norms of g
  double c_y_norm = 0.0;
  double eps_max = 0.0;
  std::optional<double> state_bound;   // eps_max / (1 - rho), only when rho < 1
  std::optional<double> output_bound;  // ||C_y||_2 * state_bound

  bool bounded() const { return state_bound.has_value(); }
};

double contraction_factor(const ObserverParams& obs, const nn::PowerIterationOptions& opts = {});

StabilityReport stability_report(const ObserverParams& obs, double eps_max,
                                 const nn::PowerIterationOptions& opts = {});

struct UubBounds {
  double state = 0.0;
  double output = 0.0;
};

/// Ultimate bounds on the state and output estimation errors. Throws
/// NoBoundError when rho >= 1.
UubBounds uub_bounds(double rho, double eps_max, double c_y_norm);
UubBounds uub_bounds(double rho, double eps_max, const Mat& C_y);

struct UubVerificationConfig {
  int trials = 100;
  int steps = 10000;
  double eps_max = 0.01;
  /// ||e_0||; the initial error direction is random.
  double initial_error = 1.0;
  /// Commands are drawn uniformly from [-limit, limit]^3 each step.
  double command_limit = 0.5;
  std::uint64_t seed = 1;
  /// Number of trials whose ||e_k|| trace is kept for export.
  int trace_trials = 0;
  /// Numerical slack on the per-step inequalities.
  double slack = 1e-9;
  int threads = 1;
};

struct UubVerification {
  StabilityReport report;
  /// sup ||e_k|| over k >= steps/2, across all trials.
  double tail_sup = 0.0;
  /// max over steps of ||e_{k+1}|| - rho ||e_k|| - eps_max (<= slack when the
  /// recursion holds).
  double max_recursion_excess = -1e300;
  /// max over steps of ||C_y e_k|| - ||C_y|| ||e_k||.
  double max_output_excess = -1e300;
  int diverged_trials = 0;
  std::vector<std::vector<double>> traces;

  bool recursion_holds(double slack) const { return max_recursion_excess <= slack; }
  bool output_holds(double slack) const { return max_output_excess <= slack; }
  bool tail_within_bound() const { return report.bounded() && tail_sup <= *report.state_bound; }
};

/// Simulates the true system x+ = A x + g(x, u) + eps (||eps|| = eps_max,
/// random direction) alongside the observer driven by y = C_y x, using the
/// observer's own A and g, and checks the contraction recursion and the
/// ultimate bound. Throws NoBoundError when rho >= 1.
UubVerification verify_uub(const ObserverParams& obs, const UubVerificationConfig& config);

}  // namespace psr::stability
