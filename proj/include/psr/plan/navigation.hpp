#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "psr/plan/mppi.hpp"
#include "psr/sim/surrogate.hpp"

namespace psr::plan {

struct NavigationConfig {
  MppiConfig mppi;
  sim::SurrogateConfig plant;
  double max_duration = 30.0;      // s
  double success_distance = 0.2;   // m
  double success_yaw = 0.2;        // rad
  double hold_time = 1.0;          // s the pose must stay within tolerance
  int replan_steps = 2;            // surrogate steps per planning cycle
  /// Std of Gaussian noise on the pose handed to the planner (0: perfect).
  double pose_noise = 0.0;
  bool record_trajectory = true;

  void validate() const;
};

struct TrajectoryRow {
  double time = 0.0;
  PlanarPose pose;
  Command command = Command::Zero();
  double position_error = 0.0;
  double yaw_error = 0.0;
};

struct TrialResult {
  std::uint64_t seed = 0;
  bool success = false;
  bool collided = false;
  bool timed_out = false;
  /// Time at which the successful hold began (NaN without success).
  double time_to_track = std::numeric_limits<double>::quiet_NaN();
  double duration = 0.0;
  double final_position_error = 0.0;
  double final_yaw_error = 0.0;
  int planning_cycles = 0;
  double mean_cycle_seconds = 0.0;
  std::vector<TrajectoryRow> trajectory;
};

/// Closed loop against the surrogate: the observer consumes every new
/// measurement, the planner runs every `replan_steps` steps with the robot's
/// pose, and the commands of the optimised curve are dispatched in between.
/// Ends on success (tolerance held for hold_time), on the first collision of
/// the true forward-kinematics body with the map, or at max_duration.
TrialResult run_navigation_trial(const Scene& scene, const GoalPose& goal, PredictorKind kind,
                                 const model::ModelParams* model, const BodyOccupancy& occupancy,
                                 const NavigationConfig& config, std::uint64_t seed);

std::vector<TrialResult> run_navigation(const Scene& scene, const GoalPose& goal, PredictorKind kind,
                                        const model::ModelParams* model, const BodyOccupancy& occupancy,
                                        const NavigationConfig& config, std::span<const std::uint64_t> seeds);

/// CSV with one row per trial.
std::string trials_csv(std::span<const TrialResult> trials);
/// CSV with one row per surrogate step of one trial.
std::string trajectory_csv(const TrialResult& trial);

}  // namespace psr::plan
