#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>

#include "psr/nn/linalg.hpp"

namespace psr {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, kTwoPi);
  if (w <= 0.0) w += kTwoPi;
  return w - std::numbers::pi;
}

inline Eigen::Matrix2d yaw_rotation(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

struct GlobalFrameTag {};
struct RobotFrameTag {};

/// Base pose plus joint angles. Vector layout (18 entries):
/// p_x, p_y, p_z, yaw, roll, pitch, joint_0 .. joint_11.
/// Joints are grouped per leg (abduction, hip pitch, knee) in the leg order
/// front-left, front-right, hind-left, hind-right.
template <class Frame>
struct BodyConfig {
  static constexpr int kDim = 18;
  static constexpr int kJoints = 12;

  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  std::array<double, kJoints> joints{};

  nn::Vec to_vector() const {
    nn::Vec v(kDim);
    v.head<3>() = p;
    v[3] = yaw;
    v[4] = roll;
    v[5] = pitch;
    for (int j = 0; j < kJoints; ++j) v[6 + j] = joints[static_cast<std::size_t>(j)];
    return v;
  }

  template <class Derived>
  static BodyConfig from_vector(const Eigen::MatrixBase<Derived>& v) {
    BodyConfig c;
    c.p = v.template head<3>();
    c.yaw = v[3];
    c.roll = v[4];
    c.pitch = v[5];
    for (int j = 0; j < kJoints; ++j) c.joints[static_cast<std::size_t>(j)] = v[6 + j];
    return c;
  }

  /// Measured part: roll, pitch, joints.
  nn::Vec measured() const { return to_vector().tail(14); }

  Eigen::Matrix<double, 12, 1> joint_vector() const {
    return Eigen::Map<const Eigen::Matrix<double, 12, 1>>(joints.data());
  }
};

using FullBodyConfig = BodyConfig<GlobalFrameTag>;
using RelativeConfig = BodyConfig<RobotFrameTag>;

/// Reference frame of the robocentric transform: base position and yaw.
struct FramePose {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

/// Planar pose (x, y, yaw).
struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Expresses z in the frame (p_H, yaw_H): position R_z(-yaw_H)(p - p_H),
/// yaw difference wrapped to (-pi, pi], roll/pitch/joints unchanged.
RelativeConfig robocentric(const FullBodyConfig& z, const FramePose& frame);

/// Inverse of robocentric.
FullBodyConfig global_project(const RelativeConfig& z, const FramePose& frame);

}  // namespace psr
