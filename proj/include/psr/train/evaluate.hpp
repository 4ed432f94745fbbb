#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "psr/data/dataset.hpp"
#include "psr/model/observer_predictor.hpp"

namespace psr::train {

/// Per-horizon-step mean and standard deviation across windows.
struct HorizonStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Output-error statistics ||y_k - C_y x_k|| for k = 0..H across draws.
struct ObserverCurve {
  std::vector<double> median;
  std::vector<double> mean;
  /// median[H] / median[0].
  double final_ratio() const;
};

struct EvaluationConfig {
  int observer_draws = 100;
  double init_range = 10.0;  // x_0 ~ U[-init_range, init_range]^n_x
  double dt = 0.02;
  std::uint64_t seed = 1;
  /// Evenly spaced subset of windows; 0 uses all.
  int max_windows = 0;
};

struct EvaluationReport {
  int windows = 0;
  HorizonStats learned;  // 2D position error of the learned predictor
  HorizonStats cv;       // same for the constant-velocity baseline
  ObserverCurve observer;
};

/// ||(p'_x, p'_y) - target||_2 at every horizon step.
std::vector<double> position_errors(const nn::Mat& predicted, const nn::Mat& targets);

/// 2D position of the constant-velocity baseline in the window's frame,
/// driven by the window's horizon commands: T x 2.
nn::Mat cv_positions(const data::WindowSample& window, double dt);

HorizonStats horizon_stats(const std::vector<std::vector<double>>& per_window);

/// Observer output error curves from random initial states.
ObserverCurve observer_convergence(const model::ObserverParams& obs, std::span<const data::WindowSample> windows,
                                   int draws, double init_range, std::uint64_t seed);

EvaluationReport evaluate(const model::ModelParams& model, const data::WindowDataset& dataset,
                          const EvaluationConfig& config = {});

}  // namespace psr::train
