#pragma once

#include <span>
#include <vector>

#include "psr/geometry.hpp"
#include "psr/model/observer_predictor.hpp"

namespace psr::model {

/// Constant-velocity baseline: q_{k+1} = q_k + R_z(yaw_k) u_k dt, assuming the
/// commands are tracked perfectly. Returns one pose per command.
std::vector<PlanarPose> cv_rollout(const PlanarPose& q, std::span<const Command> commands, double dt);

}  // namespace psr::model
