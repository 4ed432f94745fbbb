#pragma once

#include <array>
#include <span>
#include <vector>

#include "psr/geometry.hpp"
#include "psr/model/observer_predictor.hpp"
#include "psr/occupancy/occupancy.hpp"
#include "psr/plan/scene.hpp"
#include "psr/plan/voxel_map.hpp"

namespace psr::plan {

using model::Command;

/// Constants of the MPPI planner and its cost.
struct MppiConfig {
  int samples = 1000;
  int horizon = 200;
  double temperature = 1.0;
  /// Per-coordinate standard deviation of the control-point perturbation.
  Eigen::Vector3d sigma{0.1, 0.1, 0.15};
  int degree = 3;
  double w_collision = 500.0;
  double w_goal = 10.0;
  double w_control = 0.01;
  double d_switch = 0.5;
  double s_switch = 0.5;
  /// Symmetric command box: |u_c| <= command_limit[c].
  Eigen::Vector3d command_limit{0.5, 0.5, 0.5};
  double dt = 0.02;
  /// Collision checks run on every k-th horizon step and count k times.
  int collision_stride = 1;
  /// Keep the unperturbed nominal as sample 0.
  bool include_nominal = true;
  int threads = 1;

  void validate() const;
};

Command clamp_command(const Command& u, const Eigen::Vector3d& limit);

/// Where the planner gets body occupancy points from.
enum class OccupancySource {
  kLearned,  // the learned h(theta)
  kOracle,   // forward kinematics
  kStatic,   // one fixed point set (nominal stance), independent of theta
};

struct BodyOccupancy {
  OccupancySource source = OccupancySource::kOracle;
  occupancy::OccupancyConfig config;
  occupancy::OccupancyModel learned;
  occupancy::PointSet static_points;

  static BodyOccupancy oracle(const occupancy::OccupancyConfig& config = {});
  static BodyOccupancy from_model(occupancy::OccupancyModel model, const occupancy::OccupancyConfig& config = {});
  /// Nominal-stance FK points for every configuration.
  static BodyOccupancy fixed(const occupancy::OccupancyConfig& config = {}, const sim::SurrogateConfig& plant = {});

  occupancy::PointSet points(const occupancy::Joints& joints) const;
  /// Radius around the base containing every point.
  double radius() const;
};

/// Number of occupancy points inside occupied voxels after rotating by the
/// configuration's yaw and translating by its position.
int collision_cost(const FullBodyConfig& z, const VoxelMap& map, const occupancy::PointSet& base_points);
int collision_cost(const FullBodyConfig& z, const VoxelMap& map, const BodyOccupancy& occupancy);

/// Terms of the per-step goal cost.
struct GoalCost {
  double position = 0.0;  // ||p_xy - goal_xy||
  double blend = 0.0;     // sigma((dist - d_switch) / s_switch)
  double yaw = 0.0;       // blend |yaw - heading| + (1 - blend) |yaw - goal_yaw|
  double heading = 0.0;   // direction of travel (valid only if has_heading)
  bool has_heading = false;
  double total() const { return position + yaw; }
};

/// Below this step displacement (m) the heading term is dropped.
inline constexpr double kMinHeadingDisplacement = 1e-3;

/// Goal cost at one step. The heading is the direction from `previous_xy`
/// to `xy`; with displacement under 1 mm the heading term is zero.
GoalCost goal_cost(const Eigen::Vector2d& xy, double yaw, const Eigen::Vector2d& previous_xy, const GoalPose& goal,
                   const MppiConfig& config);

/// ||u||^2.
double control_cost(const Command& u);

/// Sum over t = 1..T of w_c l_coll + w_g l_goal + w_u l_ctl for a rollout
/// already in the global frame. `start_xy` is the position before step 1
/// (used for the first heading). Collisions are checked at every step.
double trajectory_cost(std::span<const FullBodyConfig> rollout, std::span<const Command> commands,
                       const Eigen::Vector2d& start_xy, const VoxelMap& map, const BodyOccupancy& occupancy,
                       const GoalPose& goal, const MppiConfig& config);

/// Softmax of -J / temperature after subtracting min J. Non-finite costs get
/// weight 0; throws InfeasibleError when no cost is finite.
std::vector<double> mppi_weights(std::span<const double> costs, double temperature);

}  // namespace psr::plan
