#include "psr/model/cv_baseline.hpp"

#include <cmath>

namespace psr::model {

std::vector<PlanarPose> cv_rollout(const PlanarPose& q, std::span<const Command> commands, double dt) {
  std::vector<PlanarPose> out;
  out.reserve(commands.size());
  PlanarPose cur = q;
  for (const Command& u : commands) {
    const double c = std::cos(cur.yaw), s = std::sin(cur.yaw);
    cur.x += (c * u[0] - s * u[1]) * dt;
    cur.y += (s * u[0] + c * u[1]) * dt;
    cur.yaw += u[2] * dt;
    out.push_back(cur);
  }
  return out;
}

}  // namespace psr::model
