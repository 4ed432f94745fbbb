#include "psr/geometry.hpp"

namespace psr {

RelativeConfig robocentric(const FullBodyConfig& z, const FramePose& frame) {
  RelativeConfig r;
  const Eigen::Matrix2d rot = yaw_rotation(-frame.yaw);
  const Eigen::Vector3d d = z.p - frame.p;
  r.p.head<2>() = rot * d.head<2>();
  r.p.z() = d.z();
  r.yaw = wrap_angle(z.yaw - frame.yaw);
  r.roll = z.roll;
  r.pitch = z.pitch;
  r.joints = z.joints;
  return r;
}

FullBodyConfig global_project(const RelativeConfig& z, const FramePose& frame) {
  FullBodyConfig g;
  const Eigen::Matrix2d rot = yaw_rotation(frame.yaw);
  g.p.head<2>() = rot * z.p.head<2>() + frame.p.head<2>();
  g.p.z() = z.p.z() + frame.p.z();
  g.yaw = wrap_angle(z.yaw + frame.yaw);
  g.roll = z.roll;
  g.pitch = z.pitch;
  g.joints = z.joints;
  return g;
}

}  // namespace psr
