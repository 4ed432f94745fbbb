#include "psr/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "psr/nn/grad_tape.hpp"
#include "psr/stability/stability.hpp"

namespace psr::train {

using model::kCommandDim;
using model::kConfigDim;
using model::kMeasuredDim;
using model::kUnmeasuredDim;
using nn::GradTape;
using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("training alpha must be >= 0");
  if (!(eps > 0.0)) throw ConfigError("training eps must be > 0");
  if (epochs < 1) throw ConfigError("training epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("training batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("training lr must be > 0");
  if (!(clip_norm >= 0.0)) throw ConfigError("training clip_norm must be >= 0");
  if (dims.latent < 1) throw ConfigError("model latent dimension must be >= 1");
}

namespace {

void check_sample(const ModelParams& model, const WindowSample& s) {
  const int H = s.history();
  const int T = s.horizon();
  nn::require_dims(static_cast<Eigen::Index>(s.u.size()), H + T + 1, "window command count");
  nn::require_dims(s.targets.cols(), kConfigDim, "window target width");
  for (const Vec& y : s.y) nn::require_dims(y.size(), kMeasuredDim, "window measurement");
  (void)model;
}

// Measurements (or commands) of every sample at one timestep, one per column.
Tensor gather_y(std::span<const WindowSample* const> batch, int k) {
  Tensor m(kMeasuredDim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) m.col(static_cast<Eigen::Index>(b)) = batch[b]->y[static_cast<std::size_t>(k)];
  return m;
}

Tensor gather_u(std::span<const WindowSample* const> batch, int k) {
  Tensor m(kCommandDim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) m.col(static_cast<Eigen::Index>(b)) = batch[b]->u[static_cast<std::size_t>(k)];
  return m;
}

Tensor gather_target(std::span<const WindowSample* const> batch, int t) {
  Tensor m(kConfigDim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) m.col(static_cast<Eigen::Index>(b)) = batch[b]->targets.row(t).transpose();
  return m;
}

Vec flatten(const Tensor& g) {
  const nn::Mat rm = g;  // to row-major
  return Eigen::Map<const Vec>(rm.data(), rm.size());
}

// Batched forward pass without gradients; calls emit(t, z) with the 18 x B
// outputs of every horizon step.
template <class Emit>
void batch_forward(const ModelParams& m, std::span<const WindowSample* const> batch, Emit&& emit) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const int H = batch.front()->history();
  const int T = batch.front()->horizon();
  const auto& obs = m.observer;
  const Eigen::Index n = m.latent();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, B);
  Eigen::MatrixXd gin(n + kCommandDim, B);
  for (int k = 0; k < H; ++k) {
    gin.topRows(n) = x;
    gin.bottomRows(kCommandDim) = gather_u(batch, k);
    const Eigen::MatrixXd innov = gather_y(batch, k) - obs.C_y * x;
    x = obs.A * x + nn::mlp_forward_batch(obs.g, gin) + obs.K * innov;
  }
  Eigen::MatrixXd z(kConfigDim, B);
  for (int t = 0; t < T; ++t) {
    x = nn::gru_step_batch(m.predictor.f, x, gather_u(batch, H + t));
    z.topRows(kUnmeasuredDim) = m.predictor.C_u * x;
    z.bottomRows(kMeasuredDim) = obs.C_y * x;
    emit(t, z);
  }
}

// Runs batch_forward over `samples` in chunks of uniform H and T.
template <class Emit>
void chunked_forward(const ModelParams& model, std::span<const WindowSample> samples, Emit&& emit) {
  constexpr std::size_t kChunk = 64;
  std::vector<const WindowSample*> ptrs;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    ptrs.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + kChunk); ++i) {
      check_sample(model, samples[i]);
      if (samples[i].history() != samples.front().history() || samples[i].horizon() != samples.front().horizon()) {
        throw DimensionError("samples differ in H or T");
      }
      ptrs.push_back(&samples[i]);
    }
    batch_forward(model, ptrs, [&](int t, const Eigen::MatrixXd& z) { emit(start, ptrs, t, z); });
  }
}

}  // namespace

double prediction_loss(const ModelParams& model, const WindowSample& sample) {
  check_sample(model, sample);
  const int H = sample.history();
  const int T = sample.horizon();
  const std::span<const model::Command> us(sample.u);
  const model::LatentState x = model::observer_unroll(
      model.observer, model::LatentState{Vec::Zero(model.latent())}, sample.y, us.first(static_cast<std::size_t>(H) + 1));
  const nn::Mat pred = model::predict(model.predictor, model.observer.C_y, x,
                                      us.subspan(static_cast<std::size_t>(H), static_cast<std::size_t>(T)));
  return (pred - sample.targets).squaredNorm() / static_cast<double>(T * kConfigDim);
}

double prediction_loss(const ModelParams& model, std::span<const WindowSample> samples) {
  if (samples.empty()) throw DomainError("prediction_loss: no samples");
  double total = 0.0;
  chunked_forward(model, samples, [&](std::size_t, const auto& batch, int t, const Eigen::MatrixXd& z) {
    total += (z - gather_target(batch, t)).squaredNorm();
  });
  const double per_sample = static_cast<double>(samples.front().horizon() * kConfigDim);
  return total / (per_sample * static_cast<double>(samples.size()));
}

std::vector<nn::Mat> predict_windows(const ModelParams& model, std::span<const WindowSample> samples) {
  std::vector<nn::Mat> out;
  out.reserve(samples.size());
  for (const WindowSample& s : samples) out.emplace_back(s.horizon(), kConfigDim);
  chunked_forward(model, samples, [&](std::size_t start, const auto& batch, int t, const Eigen::MatrixXd& z) {
    for (std::size_t b = 0; b < batch.size(); ++b) out[start + b].row(t) = z.col(static_cast<Eigen::Index>(b)).transpose();
  });
  return out;
}

double stability_loss(const model::ObserverParams& obs, double eps, const nn::PowerIterationOptions& opts) {
  return std::max(0.0, stability::contraction_factor(obs, opts) - (1.0 - eps));
}

LossGradient loss_and_gradient(const ModelParams& model, std::span<const WindowSample* const> batch,
                               double alpha, double eps, bool stability, SpectralCache* cache,
                               const nn::PowerIterationOptions& spectral) {
  if (batch.empty()) throw DomainError("loss_and_gradient: empty minibatch");
  model.validate();
  const int H = batch.front()->history();
  const int T = batch.front()->horizon();
  for (const WindowSample* s : batch) {
    check_sample(model, *s);
    if (s->history() != H || s->horizon() != T) throw DimensionError("loss_and_gradient: samples differ in H or T");
  }
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index n = model.latent();

  GradTape tape;
  std::vector<Var> ordered;
  auto param = [&](const Tensor& v) {
    Var var = tape.variable(v);
    ordered.push_back(var);
    return var;
  };
  const auto& obs = model.observer;
  const Var A = param(obs.A);
  const Var K = param(obs.K);
  const Var C_y = param(obs.C_y);
  nn::MlpVars g;
  for (std::size_t i = 0; i < obs.g.weights.size(); ++i) {
    g.weights.push_back(param(obs.g.weights[i]));
    g.biases.push_back(param(obs.g.biases[i]));
  }
  GradTape::GruVars f;
  f.w_ih = param(model.predictor.f.w_ih);
  f.w_hh = param(model.predictor.f.w_hh);
  f.b_ih = param(model.predictor.f.b_ih);
  f.b_hh = param(model.predictor.f.b_hh);
  const Var C_u = param(model.predictor.C_u);

  Var x = tape.constant(Tensor::Zero(n, B));
  for (int k = 0; k < H; ++k) {
    const Var u = tape.constant(gather_u(batch, k));
    const Var y = tape.constant(gather_y(batch, k));
    const Var gx = nn::mlp_forward(tape, g, tape.concat_rows(x, u));
    const Var innov = tape.sub(y, tape.matmul(C_y, x));
    x = tape.add(tape.add(tape.matmul(A, x), gx), tape.matmul(K, innov));
  }
  std::vector<Var> errors;
  errors.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    x = tape.gru_cell(f, x, tape.constant(gather_u(batch, H + t)));
    const Var z = tape.concat_rows(tape.matmul(C_u, x), tape.matmul(C_y, x));
    errors.push_back(tape.squared_error(z, gather_target(batch, t)));
  }
  const double norm = 1.0 / (static_cast<double>(T) * kConfigDim * static_cast<double>(B));
  const Var pred = tape.scale(tape.sum(errors), norm);

  LossGradient out;
  out.terms.prediction = tape.value(pred)(0, 0);
  Var total = pred;
  if (stability) {
    if (cache != nullptr) cache->vectors.resize(1 + obs.g.weights.size());
    auto warm = [&](std::size_t i) { return cache != nullptr ? &cache->vectors[i] : nullptr; };
    const Var a_c = tape.sub(A, tape.matmul(K, C_y));
    Var lg = tape.spectral_norm(g.weights[0], spectral, warm(1));
    for (std::size_t i = 1; i < g.weights.size(); ++i) {
      lg = tape.mul(lg, tape.spectral_norm(g.weights[i], spectral, warm(i + 1)));
    }
    const Var rho = tape.add(tape.spectral_norm(a_c, spectral, warm(0)), lg);
    const Var hinge = tape.hinge(tape.add_scalar(rho, -(1.0 - eps)));
    out.terms.rho = tape.value(rho)(0, 0);
    out.terms.stability = tape.value(hinge)(0, 0);
    total = tape.add(pred, tape.scale(hinge, alpha));
  }
  out.terms.total = tape.value(total)(0, 0);
  tape.backward(total);
  out.grads.reserve(ordered.size());
  for (Var v : ordered) out.grads.push_back(flatten(tape.grad(v)));
  return out;
}

TrainResult train(const data::WindowDataset& train_set, const data::WindowDataset& test_set, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  config.validate();
  nn::Rng rng(config.seed);
  return train(ModelParams::init(config.dims, rng), train_set, test_set, config, on_epoch);
}

TrainResult train(ModelParams initial, const data::WindowDataset& train_set, const data::WindowDataset& test_set,
                  const TrainConfig& config, const std::function<void(const EpochStats&)>& on_epoch) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  initial.validate();
  if (train_set.windows.empty()) throw DomainError("train: empty training set");

  // Shuffling uses its own stream so initialisation and ordering are
  // independent of each other.
  nn::Rng rng(config.seed ^ 0x5DEECE66Dull);
  ModelParams model = std::move(initial);
  nn::AdamState adam;
  adam.options.lr = config.lr;
  SpectralCache cache;

  std::vector<WindowSample> eval_subset;
  const auto& eval_source = test_set.windows.empty() ? train_set.windows : test_set.windows;
  if (config.eval_windows > 0 && static_cast<std::size_t>(config.eval_windows) < eval_source.size()) {
    const double stride = static_cast<double>(eval_source.size()) / config.eval_windows;
    for (int i = 0; i < config.eval_windows; ++i) eval_subset.push_back(eval_source[static_cast<std::size_t>(i * stride)]);
  } else {
    eval_subset = eval_source;
  }

  TrainResult result;
  TrainReport& report = result.report;
  std::optional<ModelParams> best, fallback;
  double best_loss = std::numeric_limits<double>::infinity();
  double fallback_loss = std::numeric_limits<double>::infinity();
  int fallback_epoch = -1;

  std::vector<std::size_t> order(train_set.windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto t_start = Clock::now();
  std::vector<const WindowSample*> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(config.batch_size)); ++i) {
        batch.push_back(&train_set.windows[order[i]]);
      }
      LossGradient lg = loss_and_gradient(model, batch, config.alpha, config.eps, config.stability, &cache);
      if (!std::isfinite(lg.terms.total)) {
        report.seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
        throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch + 1) + ": non-finite loss", report);
      }
      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const Vec& g : lg.grads) sq += g.squaredNorm();
        const double gn = std::sqrt(sq);
        if (gn > config.clip_norm) {
          for (Vec& g : lg.grads) g *= config.clip_norm / gn;
        }
      }
      const auto refs = model.tensors();
      nn::adam_step(adam, refs, lg.grads);
      loss_sum += lg.terms.prediction;
      ++batches;
    }

    EpochStats st;
    st.epoch = epoch + 1;
    st.train_loss = loss_sum / batches;
    st.test_loss = prediction_loss(model, eval_subset);
    st.rho = stability::contraction_factor(model.observer);
    st.stab_loss = std::max(0.0, st.rho - (1.0 - config.eps));
    st.seconds = std::chrono::duration<double>(Clock::now() - t_epoch).count();
    report.epochs.push_back(st);
    if (on_epoch) on_epoch(st);
    if (!std::isfinite(st.test_loss) || !std::isfinite(st.rho)) {
      report.seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
      throw TrainingDiverged("training diverged in epoch " + std::to_string(st.epoch) + ": non-finite test loss", report);
    }
    const bool admissible = !config.stability || st.rho <= 1.0 - config.eps;
    if (admissible && st.test_loss < best_loss) {
      best_loss = st.test_loss;
      best = model;
      report.best_epoch = st.epoch;
    }
    if (st.test_loss < fallback_loss) {
      fallback_loss = st.test_loss;
      fallback = model;
      fallback_epoch = st.epoch;
    }
  }
  report.seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
  if (best) {
    result.model = std::move(*best);
  } else {
    report.best_epoch = fallback_epoch;
    result.model = std::move(*fallback);
  }
  report.contractive = report.epochs[static_cast<std::size_t>(report.best_epoch - 1)].rho <= 1.0 - config.eps;
  return result;
}

}  // namespace psr::train
