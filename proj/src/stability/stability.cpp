#include "psr/stability/stability.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "psr/errors.hpp"
#include "psr/util/parallel.hpp"

namespace psr::stability {

double contraction_factor(const ObserverParams& obs, const nn::PowerIterationOptions& opts) {
  const Mat a_c = obs.A - obs.K * obs.C_y;
  return nn::spectral_norm(a_c, opts) + nn::lipschitz_upper_bound(obs.g, opts);
}

StabilityReport stability_report(const ObserverParams& obs, double eps_max, const nn::PowerIterationOptions& opts) {
  StabilityReport r;
  const Mat a_c = obs.A - obs.K * obs.C_y;
  r.a_c_norm = nn::spectral_norm(a_c, opts);
  r.lipschitz_g = nn::lipschitz_upper_bound(obs.g, opts);
  r.rho = r.a_c_norm + r.lipschitz_g;
  r.c_y_norm = nn::spectral_norm(obs.C_y, opts);
  r.eps_max = eps_max;
  if (r.rho < 1.0 && std::isfinite(r.rho)) {
    const UubBounds b = uub_bounds(r.rho, eps_max, r.c_y_norm);
    r.state_bound = b.state;
    r.output_bound = b.output;
  }
  return r;
}

UubBounds uub_bounds(double rho, double eps_max, double c_y_norm) {
  if (!(rho < 1.0)) {
    std::ostringstream ss;
    ss << "no bound: contraction factor rho = " << rho << " is not below 1";
    throw NoBoundError(ss.str());
  }
  if (eps_max < 0.0) throw DomainError("uub_bounds: eps_max must be non-negative");
  UubBounds b;
  b.state = eps_max / (1.0 - rho);
  b.output = c_y_norm * b.state;
  return b;
}

UubBounds uub_bounds(double rho, double eps_max, const Mat& C_y) {
  return uub_bounds(rho, eps_max, nn::spectral_norm(C_y, {10000, 1e-15}));
}

namespace {

struct TrialResult {
  double tail_sup = 0.0;
  double recursion_excess = -1e300;
  double output_excess = -1e300;
  bool diverged = false;
  std::vector<double> trace;
};

nn::Vec random_direction(Eigen::Index n, nn::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Vec v(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  } while (v.norm() == 0.0);
  return v.normalized();
}

TrialResult run_trial(const ObserverParams& obs, const UubVerificationConfig& cfg, double rho, double c_y_norm,
                      std::uint64_t seed, bool keep_trace) {
  nn::Rng rng(seed);
  const Eigen::Index n = obs.latent();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> cmd(-cfg.command_limit, cfg.command_limit);

  nn::Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = unit(rng);
  model::LatentState est{x - cfg.initial_error * random_direction(n, rng)};

  TrialResult r;
  const int tail_start = cfg.steps / 2;
  double e_norm = (x - est.x).norm();
  nn::Vec gin(n + model::kCommandDim);
  for (int k = 0; k < cfg.steps; ++k) {
    if (keep_trace) r.trace.push_back(e_norm);
    const nn::Vec e = x - est.x;
    r.output_excess = std::max(r.output_excess, (obs.C_y * e).norm() - c_y_norm * e_norm);
    if (k >= tail_start) r.tail_sup = std::max(r.tail_sup, e_norm);

    const model::Command u(cmd(rng), cmd(rng), cmd(rng));
    const nn::Vec y = obs.C_y * x;
    gin.head(n) = x;
    gin.tail(model::kCommandDim) = u;
    nn::Vec disturbance = cfg.eps_max * random_direction(n, rng);
    x = obs.A * x + nn::mlp_forward(obs.g, gin) + disturbance;
    est = model::observer_step(obs, est, u, y);
    if (!x.allFinite() || x.norm() > 1e12) {
      r.diverged = true;
      break;
    }
    const double next = (x - est.x).norm();
    r.recursion_excess = std::max(r.recursion_excess, next - rho * e_norm - cfg.eps_max);
    e_norm = next;
  }
  if (!r.diverged) {
    if (keep_trace) r.trace.push_back(e_norm);
    if (cfg.steps >= tail_start) r.tail_sup = std::max(r.tail_sup, e_norm);
  }
  return r;
}

}  // namespace

UubVerification verify_uub(const ObserverParams& obs, const UubVerificationConfig& config) {
  obs.validate();
  if (config.trials < 1 || config.steps < 1) throw DomainError("verify_uub: trials and steps must be positive");
  // Tight norms: power iteration approaches sigma_max from below, and an
  // underestimated rho would show up as a spurious violation.
  const nn::PowerIterationOptions tight{20000, 1e-15};
  UubVerification out;
  out.report = stability_report(obs, config.eps_max, tight);
  if (!out.report.bounded()) {
    std::ostringstream ss;
    ss << "no bound: contraction factor rho = " << out.report.rho << " is not below 1";
    throw NoBoundError(ss.str());
  }

  std::vector<TrialResult> results(static_cast<std::size_t>(config.trials));
  util::parallel_for(results.size(), config.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      results[i] = run_trial(obs, config, out.report.rho, out.report.c_y_norm, config.seed * 1000003ull + i,
                             static_cast<int>(i) < config.trace_trials);
    }
  });
  for (TrialResult& r : results) {
    if (r.diverged) {
      ++out.diverged_trials;
      continue;
    }
    out.tail_sup = std::max(out.tail_sup, r.tail_sup);
    out.max_recursion_excess = std::max(out.max_recursion_excess, r.recursion_excess);
    out.max_output_excess = std::max(out.max_output_excess, r.output_excess);
    if (!r.trace.empty()) out.traces.push_back(std::move(r.trace));
  }
  return out;
}

}  // namespace psr::stability
