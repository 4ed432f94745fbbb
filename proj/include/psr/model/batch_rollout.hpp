#pragma once

#include <vector>

#include "psr/model/observer_predictor.hpp"

namespace psr::model {

/// N command sequences of length T, sample-major: data[(i * T + t) * 3 + c].
struct CommandBatch {
  int samples = 0;
  int horizon = 0;
  std::vector<double> data;

  CommandBatch() = default;
  CommandBatch(int n, int t) : samples(n), horizon(t), data(static_cast<std::size_t>(n) * t * kCommandDim, 0.0) {}

  Command at(int i, int t) const;
  void set(int i, int t, const Command& u);
};

/// N predicted trajectories, sample-major: data[(i * T + t) * 18 + d].
struct RolloutBatch {
  int samples = 0;
  int horizon = 0;
  std::vector<double> data;

  /// T x 18 trajectory of sample i.
  Mat trajectory(int i) const;
};

enum class RolloutPrecision {
  /// 64-bit, one sample at a time through the same kernel as predict();
  /// results are bitwise identical to N separate predict() calls.
  kExact64,
  /// 32-bit, all samples advanced together with matrix-matrix products.
  kFast32,
};

const char* to_string(RolloutPrecision p);

/// Rolls every command sequence from a shared latent state. threads <= 0
/// uses hardware concurrency; samples are independent.
RolloutBatch batch_rollout(const PredictorParams& pred, const Mat& C_y, const LatentState& x,
                           const CommandBatch& commands,
                           RolloutPrecision precision = RolloutPrecision::kExact64, int threads = 0);

/// Single-precision copy of the predictor for repeated batched rollouts.
///
/// Buffers are time-major so each step reads and writes one contiguous
/// column block: commands[(t * N + i) * 3 + c], out[(t * N + i) * 18 + d].
class BatchPredictor32 {
 public:
  using MatF = Eigen::MatrixXf;

  BatchPredictor32() = default;
  BatchPredictor32(const PredictorParams& pred, const Mat& C_y);

  Eigen::Index latent() const { return w_hh_.cols(); }

  void rollout(const Vec& x0, const float* commands, int samples, int horizon, float* out) const;

 private:
  MatF w_ih_, w_hh_, c_out_;
  Eigen::VectorXf b_ih_, b_hh_;
};

}  // namespace psr::model
