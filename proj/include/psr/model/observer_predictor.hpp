#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "psr/nn/adam.hpp"
#include "psr/nn/checkpoint.hpp"
#include "psr/nn/gru.hpp"
#include "psr/nn/linalg.hpp"
#include "psr/nn/mlp.hpp"

namespace psr::model {

using nn::Mat;
using nn::Vec;

/// Planar velocity command (v_x m/s, v_y m/s, omega_z rad/s) in the body frame.
using Command = Eigen::Vector3d;

inline constexpr Eigen::Index kCommandDim = 3;
/// Measured outputs: roll, pitch and 12 joint angles.
inline constexpr Eigen::Index kMeasuredDim = 14;
/// Full-body configuration: position (3), yaw, then the measured outputs.
inline constexpr Eigen::Index kConfigDim = 18;
inline constexpr Eigen::Index kUnmeasuredDim = kConfigDim - kMeasuredDim;

struct ModelDims {
  Eigen::Index latent = 128;
  std::vector<Eigen::Index> g_hidden{128, 128, 128};
};

/// x+ = A x + g(x, u) + K (y - C_y x)
struct ObserverParams {
  Mat A;    // n_x x n_x
  Mat K;    // n_x x n_y
  Mat C_y;  // n_y x n_x
  nn::MlpParams g;  // (n_x + n_u) -> n_x

  Eigen::Index latent() const { return A.rows(); }
  void validate() const;
};

/// x_t = f(x_{t-1}, u_t),  z'_t = [C_u; C_y] x_t
struct PredictorParams {
  nn::GruParams f;
  Mat C_u;  // (n_z - n_y) x n_x

  void validate(Eigen::Index latent) const;
};

struct ModelParams {
  ObserverParams observer;
  PredictorParams predictor;

  Eigen::Index latent() const { return observer.latent(); }
  ModelDims dims() const;
  void validate() const;

  static ModelParams init(const ModelDims& dims, nn::Rng& rng);

  /// Views over every learnable tensor in a fixed order.
  std::vector<nn::TensorRef> tensors();
  std::vector<nn::NamedTensor> to_named() const;
  static ModelParams from_named(const std::vector<nn::NamedTensor>& tensors);

  void save(const std::filesystem::path& path) const;
  static ModelParams load(const std::filesystem::path& path);
};

struct LatentState {
  Vec x;
};

LatentState observer_step(const ObserverParams& obs, const LatentState& state, const Command& u,
                          const Vec& y);

/// Runs the observer over a history of H+1 (y, u) pairs and returns the
/// estimate at the final timestep, i.e. after H corrections. The last pair is
/// not consumed; with H = 0 the initial state is returned unchanged.
LatentState observer_unroll(const ObserverParams& obs, LatentState x0, std::span<const Vec> ys,
                            std::span<const Command> us);

/// Same as observer_unroll but records ||y_k - C_y x_k|| for k = 0..H.
std::vector<double> observer_output_errors(const ObserverParams& obs, LatentState x0,
                                           std::span<const Vec> ys, std::span<const Command> us);

/// Output map [C_u; C_y] applied to a latent state.
Vec output_map(const PredictorParams& pred, const Mat& C_y, const Vec& x);

/// Rolls the predictor for commands.size() steps. Row t of the result is
/// z'_{t+1} = (p'_x, p'_y, p'_z, yaw', roll, pitch, joints...), produced by
/// applying commands[t].
Mat predict(const PredictorParams& pred, const Mat& C_y, const LatentState& x,
            std::span<const Command> commands);

}  // namespace psr::model
