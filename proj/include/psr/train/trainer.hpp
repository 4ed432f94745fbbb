#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "psr/data/dataset.hpp"
#include "psr/errors.hpp"
#include "psr/model/observer_predictor.hpp"

namespace psr::train {

using data::WindowSample;
using model::ModelParams;
using nn::Vec;

struct TrainConfig {
  double alpha = 0.1;   // weight of the stability hinge
  double eps = 1e-4;    // hinge margin: target rho <= 1 - eps
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool stability = true;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;
  /// Windows used for the per-epoch test loss; 0 uses all of them.
  int eval_windows = 0;
  model::ModelDims dims;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean L_pred over the epoch's minibatches
  double test_loss = 0.0;
  double stab_loss = 0.0;   // hinge at the end of the epoch
  double rho = 0.0;         // contraction factor at the end of the epoch
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  /// Epoch whose parameters were returned (-1: none completed).
  int best_epoch = -1;
  /// Whether the returned epoch has rho <= 1 - eps. With regularisation on,
  /// only such epochs are eligible; if none qualifies the lowest test loss
  /// overall is returned and this is false.
  bool contractive = false;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams model;
  TrainReport report;
};

/// Training aborted on a non-finite loss. Carries the epochs completed so far.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& what, TrainReport report)
      : DivergenceError(what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

/// Mean over the T horizon steps and 18 output dimensions of the squared
/// prediction error, starting the observer from x = 0.
double prediction_loss(const ModelParams& model, const WindowSample& sample);
/// Average of prediction_loss over `samples`.
double prediction_loss(const ModelParams& model, std::span<const WindowSample> samples);

/// Batched forward pass: observer from x = 0 over each history, then the
/// predictor over the window's horizon. One T x 18 matrix per sample.
std::vector<nn::Mat> predict_windows(const ModelParams& model, std::span<const WindowSample> samples);

/// max(0, rho - (1 - eps)).
double stability_loss(const model::ObserverParams& obs, double eps,
                      const nn::PowerIterationOptions& opts = {});

struct LossTerms {
  double total = 0.0;
  double prediction = 0.0;
  double stability = 0.0;
  double rho = 0.0;
};

/// Power-iteration start vectors reused between consecutive gradient
/// evaluations (one for A - K C_y, one per weight of g).
struct SpectralCache {
  std::vector<Vec> vectors;
};

struct LossGradient {
  LossTerms terms;
  /// Row-major gradients, in ModelParams::tensors() order.
  std::vector<Vec> grads;
};

/// Total loss L_pred + alpha * L_stab over a minibatch and its exact gradient.
/// The stability term is skipped entirely when `stability` is false.
/// `spectral` controls the power iterations; the u v^T gradient converges only
/// as the square root of its tolerance, so exact checks need a tight setting.
LossGradient loss_and_gradient(const ModelParams& model, std::span<const WindowSample* const> batch,
                               double alpha, double eps, bool stability, SpectralCache* cache = nullptr,
                               const nn::PowerIterationOptions& spectral = {});

/// Adam on minibatches of the training windows; returns the epoch with the
/// lowest test L_pred (among contractive epochs when regularisation is on).
/// Throws TrainingDiverged on a non-finite loss.
TrainResult train(const data::WindowDataset& train_set, const data::WindowDataset& test_set,
                  const TrainConfig& config, const std::function<void(const EpochStats&)>& on_epoch = {});

/// Same, but continuing from `initial` parameters.
TrainResult train(ModelParams initial, const data::WindowDataset& train_set, const data::WindowDataset& test_set,
                  const TrainConfig& config, const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace psr::train
