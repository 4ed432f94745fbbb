#include "psr/plan/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psr/errors.hpp"

namespace psr::plan {

void MppiConfig::validate() const {
  if (samples < 1) throw ConfigError("mppi samples must be >= 1");
  if (horizon < 2) throw ConfigError("mppi horizon must be >= 2");
  if (!(temperature > 0.0)) throw ConfigError("mppi temperature must be > 0");
  if (!(sigma.minCoeff() > 0.0)) throw ConfigError("mppi sigma must be positive");
  if (degree < 1) throw ConfigError("mppi degree must be >= 1");
  if (!(s_switch > 0.0)) throw ConfigError("mppi s_switch must be > 0");
  if (!(command_limit.minCoeff() > 0.0)) throw ConfigError("mppi command_limit must be positive");
  if (!(dt > 0.0)) throw ConfigError("mppi dt must be > 0");
  if (collision_stride < 1) throw ConfigError("mppi collision_stride must be >= 1");
  if (w_collision < 0.0 || w_goal < 0.0 || w_control < 0.0) throw ConfigError("mppi weights must be >= 0");
}

Command clamp_command(const Command& u, const Eigen::Vector3d& limit) { return u.cwiseMax(-limit).cwiseMin(limit); }

BodyOccupancy BodyOccupancy::oracle(const occupancy::OccupancyConfig& config) {
  BodyOccupancy b;
  b.source = OccupancySource::kOracle;
  b.config = config;
  return b;
}

BodyOccupancy BodyOccupancy::from_model(occupancy::OccupancyModel model, const occupancy::OccupancyConfig& config) {
  nn::require_dims(model.point_count(), config.point_count(), "occupancy model point count");
  BodyOccupancy b;
  b.source = OccupancySource::kLearned;
  b.config = config;
  b.learned = std::move(model);
  return b;
}

BodyOccupancy BodyOccupancy::fixed(const occupancy::OccupancyConfig& config, const sim::SurrogateConfig& plant) {
  BodyOccupancy b;
  b.source = OccupancySource::kStatic;
  b.config = config;
  b.static_points = occupancy::fk_occupancy(sim::nominal_joints(plant), config);
  return b;
}

occupancy::PointSet BodyOccupancy::points(const occupancy::Joints& joints) const {
  switch (source) {
    case OccupancySource::kLearned:
      return learned.evaluate(joints);
    case OccupancySource::kOracle:
      return occupancy::fk_occupancy(joints, config);
    case OccupancySource::kStatic:
      return static_points;
  }
  return {};
}

double BodyOccupancy::radius() const {
  if (source == OccupancySource::kStatic) return static_points.colwise().norm().maxCoeff();
  // Learned points may stray slightly from the kinematic envelope.
  return occupancy::bounding_radius(config) + (source == OccupancySource::kLearned ? 0.1 : 0.0);
}

int collision_cost(const FullBodyConfig& z, const VoxelMap& map, const occupancy::PointSet& pts) {
  if (map.empty()) return 0;
  const double c = std::cos(z.yaw), s = std::sin(z.yaw);
  int hits = 0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const double x = z.p.x() + c * pts(0, i) - s * pts(1, i);
    const double y = z.p.y() + s * pts(0, i) + c * pts(1, i);
    hits += map.occupied(x, y, z.p.z() + pts(2, i)) ? 1 : 0;
  }
  return hits;
}

int collision_cost(const FullBodyConfig& z, const VoxelMap& map, const BodyOccupancy& occupancy) {
  if (map.empty()) return 0;
  return collision_cost(z, map, occupancy.points(z.joints));
}

GoalCost goal_cost(const Eigen::Vector2d& xy, double yaw, const Eigen::Vector2d& previous_xy, const GoalPose& goal,
                   const MppiConfig& config) {
  GoalCost g;
  g.position = (xy - Eigen::Vector2d(goal.x, goal.y)).norm();
  g.blend = 1.0 / (1.0 + std::exp(-(g.position - config.d_switch) / config.s_switch));
  const Eigen::Vector2d step = xy - previous_xy;
  double heading_term = 0.0;
  if (step.norm() >= kMinHeadingDisplacement) {
    g.has_heading = true;
    g.heading = std::atan2(step.y(), step.x());
    heading_term = g.blend * std::abs(wrap_angle(yaw - g.heading));
  }
  g.yaw = heading_term + (1.0 - g.blend) * std::abs(wrap_angle(yaw - goal.yaw));
  return g;
}

double control_cost(const Command& u) { return u.squaredNorm(); }

double trajectory_cost(std::span<const FullBodyConfig> rollout, std::span<const Command> commands,
                       const Eigen::Vector2d& start_xy, const VoxelMap& map, const BodyOccupancy& occupancy,
                       const GoalPose& goal, const MppiConfig& config) {
  nn::require_dims(static_cast<Eigen::Index>(rollout.size()), static_cast<Eigen::Index>(commands.size()),
                   "trajectory_cost rollout vs commands");
  double j = 0.0;
  Eigen::Vector2d prev = start_xy;
  for (std::size_t t = 0; t < rollout.size(); ++t) {
    const FullBodyConfig& z = rollout[t];
    const Eigen::Vector2d xy = z.p.head<2>();
    j += config.w_collision * collision_cost(z, map, occupancy);
    j += config.w_goal * goal_cost(xy, z.yaw, prev, goal, config).total();
    j += config.w_control * control_cost(commands[t]);
    prev = xy;
  }
  return j;
}

std::vector<double> mppi_weights(std::span<const double> costs, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("mppi_weights: temperature must be > 0");
  double lo = std::numeric_limits<double>::infinity();
  for (double c : costs) {
    if (std::isfinite(c)) lo = std::min(lo, c);
  }
  if (!std::isfinite(lo)) throw InfeasibleError("every sampled trajectory has a non-finite cost");
  std::vector<double> w(costs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (std::isfinite(costs[i])) {
      w[i] = std::exp(-(costs[i] - lo) / temperature);
      total += w[i];
    }
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace psr::plan
