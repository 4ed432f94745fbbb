#include "psr/train/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "psr/errors.hpp"
#include "psr/model/cv_baseline.hpp"
#include "psr/train/trainer.hpp"

namespace psr::train {

double ObserverCurve::final_ratio() const {
  if (median.empty() || median.front() == 0.0) return 0.0;
  return median.back() / median.front();
}

std::vector<double> position_errors(const nn::Mat& predicted, const nn::Mat& targets) {
  nn::require_dims(predicted.rows(), targets.rows(), "position_errors rows");
  std::vector<double> err(static_cast<std::size_t>(predicted.rows()));
  for (Eigen::Index t = 0; t < predicted.rows(); ++t) {
    err[static_cast<std::size_t>(t)] = std::hypot(predicted(t, 0) - targets(t, 0), predicted(t, 1) - targets(t, 1));
  }
  return err;
}

nn::Mat cv_positions(const data::WindowSample& window, double dt) {
  const int H = window.history();
  const int T = window.horizon();
  const std::span<const model::Command> us(window.u);
  const auto poses = model::cv_rollout(PlanarPose{}, us.subspan(static_cast<std::size_t>(H), static_cast<std::size_t>(T)), dt);
  nn::Mat out(T, 2);
  for (int t = 0; t < T; ++t) {
    out(t, 0) = poses[static_cast<std::size_t>(t)].x;
    out(t, 1) = poses[static_cast<std::size_t>(t)].y;
  }
  return out;
}

HorizonStats horizon_stats(const std::vector<std::vector<double>>& per_window) {
  HorizonStats s;
  if (per_window.empty()) return s;
  const std::size_t T = per_window.front().size();
  s.mean.assign(T, 0.0);
  s.stddev.assign(T, 0.0);
  for (const auto& e : per_window) {
    for (std::size_t t = 0; t < T; ++t) s.mean[t] += e[t];
  }
  const double n = static_cast<double>(per_window.size());
  for (double& m : s.mean) m /= n;
  for (const auto& e : per_window) {
    for (std::size_t t = 0; t < T; ++t) s.stddev[t] += (e[t] - s.mean[t]) * (e[t] - s.mean[t]);
  }
  for (double& v : s.stddev) v = std::sqrt(v / n);
  return s;
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

}  // namespace

ObserverCurve observer_convergence(const model::ObserverParams& obs, std::span<const data::WindowSample> windows,
                                   int draws, double init_range, std::uint64_t seed) {
  if (windows.empty() || draws < 1) throw DomainError("observer_convergence: need windows and draws >= 1");
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> dist(-init_range, init_range);
  const std::size_t steps = windows.front().y.size();
  std::vector<std::vector<double>> per_step(steps);
  for (int d = 0; d < draws; ++d) {
    const auto& w = windows[static_cast<std::size_t>(d) * windows.size() / static_cast<std::size_t>(draws)];
    model::LatentState x0{Vec(obs.latent())};
    for (Eigen::Index i = 0; i < x0.x.size(); ++i) x0.x[i] = dist(rng);
    const std::span<const model::Command> us(w.u);
    const auto err = model::observer_output_errors(obs, x0, w.y, us.first(w.y.size()));
    for (std::size_t k = 0; k < steps; ++k) per_step[k].push_back(err[k]);
  }
  ObserverCurve c;
  for (const auto& v : per_step) {
    c.median.push_back(median_of(v));
    double m = 0.0;
    for (double e : v) m += e;
    c.mean.push_back(m / static_cast<double>(v.size()));
  }
  return c;
}

EvaluationReport evaluate(const model::ModelParams& model, const data::WindowDataset& dataset,
                          const EvaluationConfig& config) {
  if (dataset.windows.empty()) throw DomainError("evaluate: empty dataset");
  std::vector<data::WindowSample> subset;
  const auto& all = dataset.windows;
  if (config.max_windows > 0 && static_cast<std::size_t>(config.max_windows) < all.size()) {
    for (int i = 0; i < config.max_windows; ++i) {
      subset.push_back(all[static_cast<std::size_t>(i) * all.size() / static_cast<std::size_t>(config.max_windows)]);
    }
  } else {
    subset = all;
  }
  const auto predictions = predict_windows(model, subset);
  std::vector<std::vector<double>> learned, cv;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    learned.push_back(position_errors(predictions[i], subset[i].targets));
    cv.push_back(position_errors(cv_positions(subset[i], config.dt), subset[i].targets));
  }
  EvaluationReport r;
  r.windows = static_cast<int>(subset.size());
  r.learned = horizon_stats(learned);
  r.cv = horizon_stats(cv);
  r.observer = observer_convergence(model.observer, subset, config.observer_draws, config.init_range, config.seed);
  return r;
}

}  // namespace psr::train
