#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psr/model/batch_rollout.hpp"
#include "psr/plan/costs.hpp"

namespace psr::plan {

enum class PredictorKind { kLearned, kConstantVelocity };

const char* to_string(PredictorKind k);
/// "learned" or "cv"; throws ConfigError otherwise.
PredictorKind parse_predictor(const std::string& name);

struct MppiDiagnostics {
  double min_cost = 0.0;
  double mean_cost = 0.0;
  int best_sample = 0;
  /// 1 / sum(w^2).
  double effective_samples = 0.0;
  int collision_queries = 0;
  double rollout_seconds = 0.0;
  double cost_seconds = 0.0;
  double total_seconds = 0.0;
};

struct MppiResult {
  Command command = Command::Zero();  // first command of the updated sequence
  std::vector<Command> points;        // updated (weighted) control points
  std::vector<double> costs;
  std::vector<double> weights;
  MppiDiagnostics diagnostics;
};

/// Sampling planner over Bezier control points. Holds the predictor (a
/// 32-bit copy of the learned model, or the constant-velocity model), the
/// occupancy source and the voxel map, all fixed for its lifetime.
class MppiPlanner {
 public:
  MppiPlanner(MppiConfig config, PredictorKind kind, const model::ModelParams* model, BodyOccupancy occupancy,
              VoxelMap map);

  const MppiConfig& config() const { return config_; }
  PredictorKind kind() const { return kind_; }
  const VoxelMap& map() const { return map_; }
  const BodyOccupancy& occupancy() const { return occupancy_; }

  /// One MPPI iteration: perturb `nominal` N times, roll out the clamped
  /// command sequences from latent state `x` (ignored by the CV model),
  /// project into the world through `pose`, score, and average the control
  /// points with the softmax weights.
  MppiResult step(const model::LatentState& x, const FramePose& pose, std::span<const Command> nominal,
                  const GoalPose& goal, nn::Rng& rng);

  /// Commands u_1..u_T at s_t = (t - 1) / (T - 1), clamped to the box.
  std::vector<Command> commands(std::span<const Command> points) const;

  /// Control points of the same curve advanced by `steps` horizon steps,
  /// clamped to the command box.
  std::vector<Command> shift(std::span<const Command> points, int steps) const;

  /// World-frame prediction for one command sequence in 64-bit precision.
  std::vector<FullBodyConfig> rollout(const model::LatentState& x, const FramePose& pose,
                                      std::span<const Command> commands) const;

 private:
  struct Query {
    int sample;
    float x, y, z, yaw;
    std::array<float, 12> joints;
  };

  void predict_batch(const model::LatentState& x, int samples);
  int count_hits(const Query& q, const float* pts, Eigen::Index m) const;

  MppiConfig config_;
  PredictorKind kind_;
  std::optional<model::ModelParams> model_;
  model::BatchPredictor32 fast_;
  BodyOccupancy occupancy_;
  std::vector<Eigen::MatrixXf> h_weights_;
  std::vector<Eigen::VectorXf> h_biases_;
  VoxelMap map_;
  double radius_ = 0.0;
  nn::Mat basis_;  // T x (d + 1) Bernstein weights

  std::vector<Command> sample_points_;  // N x (d + 1)
  std::vector<float> commands32_;       // time-major N x T x 3
  std::vector<float> outputs32_;        // time-major N x T x 18
  std::vector<Query> queries_;
};

}  // namespace psr::plan
