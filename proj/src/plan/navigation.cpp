#include "psr/plan/navigation.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "psr/errors.hpp"
#include "psr/util/io.hpp"

namespace psr::plan {

void NavigationConfig::validate() const {
  mppi.validate();
  plant.validate();
  if (!(max_duration > 0.0)) throw ConfigError("navigation max_duration must be > 0");
  if (!(success_distance > 0.0) || !(success_yaw > 0.0)) throw ConfigError("navigation tolerances must be > 0");
  if (hold_time < 0.0) throw ConfigError("navigation hold_time must be >= 0");
  if (replan_steps < 1 || replan_steps >= mppi.horizon) {
    throw ConfigError("navigation replan_steps must be in [1, horizon)");
  }
  if (pose_noise < 0.0) throw ConfigError("navigation pose_noise must be >= 0");
  if (std::abs(mppi.dt - plant.dt) > 1e-12) throw ConfigError("planner dt must equal the surrogate dt");
}

TrialResult run_navigation_trial(const Scene& scene, const GoalPose& goal, PredictorKind kind,
                                 const model::ModelParams* model, const BodyOccupancy& occupancy,
                                 const NavigationConfig& config, std::uint64_t seed) {
  config.validate();
  const VoxelMap map = scene.voxelize();
  MppiPlanner planner(config.mppi, kind, model, occupancy, map);
  const occupancy::OccupancyConfig& body = occupancy.config;

  nn::Rng rng(seed);
  std::normal_distribution<double> pose_noise(0.0, 1.0);
  sim::SurrogateState initial;
  initial.pose = scene.start;
  sim::SurrogateRobot robot(config.plant, seed ^ 0xA5A5A5A5A5A5A5A5ull, initial);

  model::LatentState x;
  if (kind == PredictorKind::kLearned) x.x = nn::Vec::Zero(model->latent());
  std::vector<Command> nominal(static_cast<std::size_t>(config.mppi.degree + 1), Command::Zero());
  std::vector<Command> plan;
  std::size_t plan_offset = 0;

  TrialResult r;
  r.seed = seed;
  const double dt = config.plant.dt;
  const long max_steps = std::lround(config.max_duration / dt);
  double hold_start = -1.0;
  double cycle_time = 0.0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const FullBodyConfig z = robot.config_space();
    r.final_position_error = std::hypot(z.p.x() - goal.x, z.p.y() - goal.y);
    r.final_yaw_error = std::abs(wrap_angle(z.yaw - goal.yaw));
    r.duration = t;
    if (r.final_position_error < config.success_distance && r.final_yaw_error < config.success_yaw) {
      if (hold_start < 0.0) hold_start = t;
      if (t - hold_start >= config.hold_time - 1e-9) {
        r.success = true;
        r.time_to_track = hold_start;
        break;
      }
    } else {
      hold_start = -1.0;
    }
    if (k >= max_steps) {
      r.timed_out = true;
      break;
    }

    const nn::Vec y = robot.measure();
    if (k % config.replan_steps == 0) {
      FramePose pose{z.p, z.yaw};
      if (config.pose_noise > 0.0) {
        pose.p.x() += config.pose_noise * pose_noise(rng);
        pose.p.y() += config.pose_noise * pose_noise(rng);
        pose.yaw += config.pose_noise * pose_noise(rng);
      }
      const MppiResult res = planner.step(x, pose, nominal, goal, rng);
      cycle_time += res.diagnostics.total_seconds;
      ++r.planning_cycles;
      plan = planner.commands(res.points);
      plan_offset = 0;
      nominal = planner.shift(res.points, config.replan_steps);
    }
    const Command u = plan[plan_offset++];
    if (kind == PredictorKind::kLearned) x = model::observer_step(model->observer, x, u, y);
    robot.apply(u);

    if (config.record_trajectory) {
      r.trajectory.push_back({t, PlanarPose{z.p.x(), z.p.y(), z.yaw}, u, r.final_position_error, r.final_yaw_error});
    }
    const FullBodyConfig next = robot.config_space();
    if (collision_cost(next, map, occupancy::fk_occupancy(next.joints, body)) > 0) {
      r.collided = true;
      r.duration = t + dt;
      break;
    }
  }
  r.mean_cycle_seconds = r.planning_cycles > 0 ? cycle_time / r.planning_cycles : 0.0;
  return r;
}

std::vector<TrialResult> run_navigation(const Scene& scene, const GoalPose& goal, PredictorKind kind,
                                        const model::ModelParams* model, const BodyOccupancy& occupancy,
                                        const NavigationConfig& config, std::span<const std::uint64_t> seeds) {
  std::vector<TrialResult> out;
  out.reserve(seeds.size());
  for (std::uint64_t s : seeds) out.push_back(run_navigation_trial(scene, goal, kind, model, occupancy, config, s));
  return out;
}

std::string trials_csv(std::span<const TrialResult> trials) {
  std::ostringstream os;
  os << util::csv_header_comment();
  os << "seed,success,collided,timed_out,time_to_track,duration,final_position_error,final_yaw_error,"
        "planning_cycles,mean_cycle_ms\n";
  os.precision(6);
  for (const TrialResult& t : trials) {
    os << t.seed << ',' << t.success << ',' << t.collided << ',' << t.timed_out << ',';
    if (std::isnan(t.time_to_track)) {
      os << "nan";
    } else {
      os << t.time_to_track;
    }
    os << ',' << t.duration << ',' << t.final_position_error << ',' << t.final_yaw_error << ',' << t.planning_cycles
       << ',' << 1e3 * t.mean_cycle_seconds << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const TrialResult& trial) {
  std::ostringstream os;
  os << util::csv_header_comment();
  os << "seed,t,x,y,yaw,u_x,u_y,u_yaw,position_error,yaw_error\n";
  os.precision(7);
  for (const TrajectoryRow& row : trial.trajectory) {
    os << trial.seed << ',' << row.time << ',' << row.pose.x << ',' << row.pose.y << ',' << row.pose.yaw << ','
       << row.command.x() << ',' << row.command.y() << ',' << row.command.z() << ',' << row.position_error << ','
       << row.yaw_error << '\n';
  }
  return os.str();
}

}  // namespace psr::plan
