#include "psr/model/batch_rollout.hpp"

#include "psr/errors.hpp"
#include "psr/util/parallel.hpp"

namespace psr::model {

Command CommandBatch::at(int i, int t) const {
  const std::size_t o = (static_cast<std::size_t>(i) * horizon + t) * kCommandDim;
  return {data[o], data[o + 1], data[o + 2]};
}

void CommandBatch::set(int i, int t, const Command& u) {
  const std::size_t o = (static_cast<std::size_t>(i) * horizon + t) * kCommandDim;
  data[o] = u[0];
  data[o + 1] = u[1];
  data[o + 2] = u[2];
}

Mat RolloutBatch::trajectory(int i) const {
  Mat m(horizon, kConfigDim);
  const double* src = data.data() + static_cast<std::size_t>(i) * horizon * kConfigDim;
  std::copy(src, src + static_cast<std::size_t>(horizon) * kConfigDim, m.data());
  return m;
}

const char* to_string(RolloutPrecision p) {
  return p == RolloutPrecision::kExact64 ? "f64-exact" : "f32-batched";
}

RolloutBatch batch_rollout(const PredictorParams& pred, const Mat& C_y, const LatentState& x,
                           const CommandBatch& commands, RolloutPrecision precision, int threads) {
  if (commands.samples < 1) throw DomainError("batch_rollout: need at least one sample");
  if (commands.data.size() != static_cast<std::size_t>(commands.samples) * commands.horizon * kCommandDim) {
    throw DimensionError("batch_rollout: command buffer size does not match N x T x 3");
  }
  RolloutBatch out;
  out.samples = commands.samples;
  out.horizon = commands.horizon;
  out.data.assign(static_cast<std::size_t>(out.samples) * out.horizon * kConfigDim, 0.0);
  const std::size_t step = static_cast<std::size_t>(out.horizon) * kConfigDim;

  if (precision == RolloutPrecision::kExact64) {
    util::parallel_for(static_cast<std::size_t>(commands.samples), threads, [&](std::size_t b, std::size_t e) {
      std::vector<Command> seq(static_cast<std::size_t>(commands.horizon));
      for (std::size_t i = b; i < e; ++i) {
        for (int t = 0; t < commands.horizon; ++t) seq[static_cast<std::size_t>(t)] = commands.at(static_cast<int>(i), t);
        const Mat traj = predict(pred, C_y, x, seq);
        std::copy(traj.data(), traj.data() + step, out.data.data() + i * step);
      }
    });
    return out;
  }

  const BatchPredictor32 fast(pred, C_y);
  const int n = commands.samples;
  const int horizon = commands.horizon;
  // Split samples across workers; each worker runs its own column block.
  util::parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t b, std::size_t e) {
    const int m = static_cast<int>(e - b);
    std::vector<float> cmd(static_cast<std::size_t>(m) * horizon * kCommandDim);
    std::vector<float> res(static_cast<std::size_t>(m) * horizon * kConfigDim);
    for (int t = 0; t < horizon; ++t) {
      for (int j = 0; j < m; ++j) {
        const Command u = commands.at(static_cast<int>(b) + j, t);
        for (int c = 0; c < kCommandDim; ++c) {
          cmd[(static_cast<std::size_t>(t) * m + j) * kCommandDim + c] = static_cast<float>(u[c]);
        }
      }
    }
    fast.rollout(x.x, cmd.data(), m, horizon, res.data());
    for (int t = 0; t < horizon; ++t) {
      for (int j = 0; j < m; ++j) {
        const float* src = res.data() + (static_cast<std::size_t>(t) * m + j) * kConfigDim;
        double* dst = out.data.data() + (b + j) * step + static_cast<std::size_t>(t) * kConfigDim;
        for (int d = 0; d < kConfigDim; ++d) dst[d] = src[d];
      }
    }
  });
  return out;
}

BatchPredictor32::BatchPredictor32(const PredictorParams& pred, const Mat& C_y) {
  pred.validate(pred.f.hidden());
  w_ih_ = pred.f.w_ih.cast<float>();
  w_hh_ = pred.f.w_hh.cast<float>();
  b_ih_ = pred.f.b_ih.cast<float>();
  b_hh_ = pred.f.b_hh.cast<float>();
  c_out_.resize(kConfigDim, pred.f.hidden());
  c_out_.topRows(kUnmeasuredDim) = pred.C_u.cast<float>();
  c_out_.bottomRows(kMeasuredDim) = C_y.cast<float>();
}

void BatchPredictor32::rollout(const Vec& x0, const float* commands, int samples, int horizon, float* out) const {
  const Eigen::Index n = latent();
  nn::require_dims(x0.size(), n, "BatchPredictor32 latent state");
  MatF h = x0.cast<float>().replicate(1, samples);
  MatF gi(3 * n, samples), gh(3 * n, samples);
  for (int t = 0; t < horizon; ++t) {
    Eigen::Map<const MatF> u(commands + static_cast<std::size_t>(t) * samples * kCommandDim, kCommandDim, samples);
    gi.noalias() = w_ih_ * u;
    gi.colwise() += b_ih_;
    gh.noalias() = w_hh_ * h;
    gh.colwise() += b_hh_;
    auto r = (1.0f + (-(gi.topRows(n) + gh.topRows(n)).array()).exp()).inverse();
    auto z = ((1.0f + (-(gi.middleRows(n, n) + gh.middleRows(n, n)).array()).exp()).inverse()).eval();
    auto c = (gi.bottomRows(n).array() + r * gh.bottomRows(n).array()).tanh().eval();
    h = ((1.0f - z) * c + z * h.array()).matrix();
    Eigen::Map<MatF> o(out + static_cast<std::size_t>(t) * samples * kConfigDim, kConfigDim, samples);
    o.noalias() = c_out_ * h;
  }
}

}  // namespace psr::model
